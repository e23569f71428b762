#include "hlp/app/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <system_error>

namespace hlp::app {

namespace {

void append_cell(std::string & out, const std::optional<double> & v)
{
  if (v) { out += format_number(*v); }
  out += ',';
}

std::string escape_xml(const std::string & s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

/// Fixed two-decimal coordinates keep the SVG small and stable.
std::string px(double v)
{
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return {buf, r.ptr};
}

struct Range
{
  double lo{std::numeric_limits<double>::infinity()};
  double hi{-std::numeric_limits<double>::infinity()};

  void add(double v)
  {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void pad()
  {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    const double span = hi - lo;
    const double margin = span > 0.0 ? 0.05 * span : 0.5;
    lo -= margin;
    hi += margin;
  }
};

/// About five round tick values inside [lo, hi].
std::vector<double> ticks(double lo, double hi)
{
  const double raw  = (hi - lo) / 5.0;
  const double mag  = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

std::string tick_label(double v)
{
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
  return {buf, r.ptr};
}

constexpr const char * kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

std::string format_number(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, r.ptr};
}

std::string to_csv(const std::vector<CsvRow> & rows)
{
  std::string out = kCsvHeader;
  out += '\n';
  for (const CsvRow & r : rows) {
    out += format_number(r.t);
    out += ',';
    append_cell(out, r.x);
    append_cell(out, r.y);
    append_cell(out, r.theta);
    append_cell(out, r.mu_x);
    append_cell(out, r.mu_y);
    append_cell(out, r.mu_theta);
    out += std::to_string(r.segment);
    out += r.event ? ",1," : ",0,";
    out += r.branch_path;
    out += '\n';
  }
  return out;
}

std::string to_csv(const std::vector<std::string> & header, const std::vector<std::vector<std::string>> & rows)
{
  std::string out;
  auto line = [&out](const std::vector<std::string> & cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) { out += ','; }
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto & r : rows) { line(r); }
  return out;
}

void write_text(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw std::runtime_error("cannot open '" + path.string() + "' for writing"); }
  out << text;
  out.flush();
  if (!out) { throw std::runtime_error("failed writing '" + path.string() + "'"); }
}

std::string to_svg(const PlotSpec & plot)
{
  constexpr double W = 640, H = 480, left = 70, right = 20, top = 40, bottom = 60;
  constexpr double pw = W - left - right, ph = H - top - bottom;

  Range xr, yr;
  for (const auto & s : plot.series) {
    for (const auto & [x, y] : s.points) {
      xr.add(x);
      yr.add(y);
    }
  }
  xr.pad();
  yr.pad();
  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         escape_xml(plot.title) + "</text>\n";

  // axes box and ticks
  out += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(pw) + "\" height=\"" + px(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double v : ticks(xr.lo, xr.hi)) {
    const std::string X = px(sx(v));
    out += "<line x1=\"" + X + "\" y1=\"" + px(top + ph) + "\" x2=\"" + X + "\" y2=\"" + px(top + ph + 5) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + X + "\" y=\"" + px(top + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + tick_label(v) + "</text>\n";
  }
  for (double v : ticks(yr.lo, yr.hi)) {
    const std::string Y = px(sy(v));
    out += "<line x1=\"" + px(left - 5) + "\" y1=\"" + Y + "\" x2=\"" + px(left) + "\" y2=\"" + Y +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + px(left - 8) + "\" y=\"" + px(sy(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick_label(v) + "</text>\n";
  }
  out += "<text x=\"" + px(left + pw / 2) + "\" y=\"" + px(H - 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + escape_xml(plot.x_label) +
         "</text>\n";
  out += "<text x=\"18\" y=\"" + px(top + ph / 2) + "\" transform=\"rotate(-90 18 " + px(top + ph / 2) +
         ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + escape_xml(plot.y_label) +
         "</text>\n";

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const PlotSeries & s = plot.series[i];
    const std::string color = kPalette[i % std::size(kPalette)];
    out += "<polyline class=\"series\" data-label=\"" + escape_xml(s.label) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      if (k) { out += ' '; }
      out += px(sx(s.points[k].first)) + "," + px(sy(s.points[k].second));
    }
    out += "\"/>\n";
    for (const auto & [x, y] : s.markers) {
      out += "<circle class=\"event\" cx=\"" + px(sx(x)) + "\" cy=\"" + px(sy(y)) + "\" r=\"4\" fill=\"none\" stroke=\"" +
             color + "\"/>\n";
    }
    const double ly = top + 16 + 16 * static_cast<double>(i);
    out += "<line x1=\"" + px(left + pw - 90) + "\" y1=\"" + px(ly) + "\" x2=\"" + px(left + pw - 70) + "\" y2=\"" +
           px(ly) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    out += "<text x=\"" + px(left + pw - 64) + "\" y=\"" + px(ly + 4) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
           escape_xml(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace hlp::app
