#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hlp::app {

/// One line of the trajectory CSV. Empty optionals become empty cells.
struct CsvRow
{
  double t{0.0};
  std::optional<double> x;
  std::optional<double> y;
  std::optional<double> theta;
  std::optional<double> mu_x;
  std::optional<double> mu_y;
  std::optional<double> mu_theta;
  std::size_t segment{0};
  bool event{false};
  std::string branch_path;
};

inline constexpr const char * kCsvHeader = "t,x,y,theta,mu_x,mu_y,mu_theta,segment,event,branch_path";

/// Shortest round-trip decimal form; identical bits give identical text.
std::string format_number(double v);

std::string to_csv(const std::vector<CsvRow> & rows);

/// Generic numeric table with its own header, e.g. cost against time.
std::string to_csv(const std::vector<std::string> & header, const std::vector<std::vector<std::string>> & rows);

/// Writes `text` to `path`; throws std::runtime_error naming the path on failure.
void write_text(const std::filesystem::path & path, const std::string & text);

struct PlotSeries
{
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::vector<std::pair<double, double>> markers;  ///< event locations
};

struct PlotSpec
{
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Polyline plot with axes, ticks, event markers and a legend.
std::string to_svg(const PlotSpec & plot);

}  // namespace hlp::app
