#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hlp/errors.hpp"
#include "hlp/hybrid.hpp"
#include "hlp/se2.hpp"
#include "hlp/se2_system.hpp"
#include "hlp/solver.hpp"

namespace py = pybind11;
using namespace hlp;

namespace {

TerminalCost to_terminal_cost(const py::object & phi)
{
  if (py::isinstance<QuadraticTerminalCost>(phi)) { return phi.cast<QuadraticTerminalCost>(); }
  if (!PyCallable_Check(phi.ptr())) { throw py::type_error("phi must be callable"); }
  return phi.cast<std::function<double(const GroupElement &)>>();
}

BranchPolicy to_policy(const std::vector<Branch> & branches, Branch fallback) { return branch_sequence(branches, fallback); }

/// All samples of a trajectory stacked row-wise, with times and segment indices.
py::tuple stacked(const HybridTrajectory & tr)
{
  std::size_t n = 0;
  for (const Arc & a : tr.arcs) { n += a.times.size(); }
  const auto dim = tr.arcs.empty() ? 0 : tr.arcs.front().states.front().size();
  Eigen::VectorXd t(n);
  Eigen::MatrixXd x(n, dim);
  Eigen::VectorXi seg(n);
  std::size_t r = 0;
  for (std::size_t k = 0; k < tr.arcs.size(); ++k) {
    for (std::size_t i = 0; i < tr.arcs[k].times.size(); ++i, ++r) {
      t[r]     = tr.arcs[k].times[i];
      x.row(r) = tr.arcs[k].states[i].transpose();
      seg[r]   = static_cast<int>(k);
    }
  }
  return py::make_tuple(t, x, seg);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Hybrid Lie-Poisson reduction on SE(2)";
  m.attr("__version__") = "0.1.0";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<NumericalBlowup>(m, "NumericalBlowup", PyExc_RuntimeError);
  py::register_exception<MaxBisectionDepth>(m, "MaxBisectionDepth", PyExc_RuntimeError);
  py::register_exception<MaxEventsExceeded>(m, "MaxEventsExceeded", PyExc_RuntimeError);
  py::register_exception<OriginMomentum>(m, "OriginMomentum", PyExc_ValueError);
  py::register_exception<NoRealRoot>(m, "NoRealRoot", PyExc_ValueError);

  // --- group ---------------------------------------------------------------
  m.def("wrap_angle", &wrap_angle, py::arg("a"));
  m.def("signed_gap", &signed_gap, py::arg("a"), py::arg("b"));

  py::class_<AlgebraVector>(m, "AlgebraVector")
    .def(py::init([](double u, double v, double w) { return AlgebraVector{u, v, w}; }), py::arg("u") = 0.0,
         py::arg("v") = 0.0, py::arg("omega") = 0.0)
    .def_readwrite("u", &AlgebraVector::u)
    .def_readwrite("v", &AlgebraVector::v)
    .def_readwrite("omega", &AlgebraVector::omega)
    .def("matrix", &AlgebraVector::matrix)
    .def("coeffs", &AlgebraVector::coeffs)
    .def_static("from_matrix", &AlgebraVector::from_matrix)
    .def_static("basis", &AlgebraVector::basis)
    .def("__repr__", [](const AlgebraVector & a) {
      std::ostringstream s;
      s << "AlgebraVector(" << a.u << ", " << a.v << ", " << a.omega << ")";
      return s.str();
    });

  py::class_<Momentum>(m, "Momentum")
    .def(py::init([](double x, double y, double t) { return Momentum{x, y, t}; }), py::arg("mu_x") = 0.0,
         py::arg("mu_y") = 0.0, py::arg("mu_theta") = 0.0)
    .def_readwrite("mu_x", &Momentum::mu_x)
    .def_readwrite("mu_y", &Momentum::mu_y)
    .def_readwrite("mu_theta", &Momentum::mu_theta)
    .def("coeffs", &Momentum::coeffs)
    .def_static("from_coeffs", &Momentum::from_coeffs)
    .def("__repr__", [](const Momentum & a) {
      std::ostringstream s;
      s << "Momentum(" << a.mu_x << ", " << a.mu_y << ", " << a.mu_theta << ")";
      return s.str();
    });

  py::class_<ChartCovector>(m, "ChartCovector")
    .def(py::init([](double x, double y, double t) { return ChartCovector{x, y, t}; }), py::arg("px") = 0.0,
         py::arg("py") = 0.0, py::arg("ptheta") = 0.0)
    .def_readwrite("px", &ChartCovector::px)
    .def_readwrite("py", &ChartCovector::py)
    .def_readwrite("ptheta", &ChartCovector::ptheta);

  py::class_<CosetPoint>(m, "CosetPoint").def_readwrite("q", &CosetPoint::q);

  py::class_<GroupElement>(m, "GroupElement")
    .def(py::init<>())
    .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("theta"))
    .def_property_readonly("x", &GroupElement::x)
    .def_property_readonly("y", &GroupElement::y)
    .def_property_readonly("theta", &GroupElement::theta)
    .def("matrix", &GroupElement::matrix)
    .def_static("identity", &GroupElement::identity)
    .def_static("from_matrix", &GroupElement::from_matrix)
    .def("inverse", [](const GroupElement & g) { return inv(g); })
    .def("__mul__", [](const GroupElement & a, const GroupElement & b) { return mul(a, b); })
    .def("__repr__", [](const GroupElement & g) {
      std::ostringstream s;
      s << "GroupElement(" << g.x() << ", " << g.y() << ", " << g.theta() << ")";
      return s.str();
    });

  m.def("mul", &mul);
  m.def("inv", &inv);
  m.def("exp", &hlp::exp, py::arg("xi"), py::arg("t") = 1.0);
  m.def("pair", &pair);
  m.def("left_trivialize", &left_trivialize, py::arg("g"), py::arg("p"));
  m.def("right_untrivialize", &right_untrivialize, py::arg("g"), py::arg("mu"));
  m.def("adjoint", &adjoint, py::arg("h"), py::arg("xi"));
  m.def("coadjoint", &coadjoint, py::arg("h"), py::arg("mu"));
  m.def("coset_project", &coset_project);

  // --- hybrid execution ------------------------------------------------------
  py::enum_<Branch>(m, "Branch").value("plus", Branch::plus).value("minus", Branch::minus);

  py::class_<ExecConfig>(m, "ExecConfig")
    .def(py::init([](double step, double event_tol, std::size_t max_events, double min_dwell) {
           ExecConfig c{step, event_tol, max_events, min_dwell};
           c.validate();
           return c;
         }),
         py::arg("step") = 1e-3, py::arg("event_tol") = 1e-10, py::arg("max_events") = 16, py::arg("min_dwell") = 1e-6)
    .def_readwrite("step", &ExecConfig::step)
    .def_readwrite("event_tol", &ExecConfig::event_tol)
    .def_readwrite("max_events", &ExecConfig::max_events)
    .def_readwrite("min_dwell", &ExecConfig::min_dwell);

  py::class_<Arc>(m, "Arc")
    .def_readonly("t_start", &Arc::t_start)
    .def_readonly("t_end", &Arc::t_end)
    .def_readonly("times", &Arc::times)
    .def_readonly("states", &Arc::states);

  py::class_<Event>(m, "Event")
    .def_readonly("time", &Event::time)
    .def_readonly("pre_state", &Event::pre_state)
    .def_readonly("post_state", &Event::post_state)
    .def_readonly("branch", &Event::branch);

  py::class_<HybridTrajectory>(m, "HybridTrajectory")
    .def_readonly("arcs", &HybridTrajectory::arcs)
    .def_readonly("events", &HybridTrajectory::events)
    .def_property_readonly("initial_state", &HybridTrajectory::initial_state)
    .def_property_readonly("final_state", &HybridTrajectory::final_state)
    .def_property_readonly("branch_path", &HybridTrajectory::branch_path)
    .def("sample", &HybridTrajectory::sample, py::arg("t"), py::arg("segment"))
    .def("stacked", &stacked, "(times, states, segments) over all arcs");

  // --- SE(2) system ------------------------------------------------------------
  py::enum_<Actuation>(m, "Actuation").value("full", Actuation::full).value("under", Actuation::under);

  py::class_<JumpOffset>(m, "JumpOffset")
    .def(py::init([](double x, double y, double t) { return JumpOffset{x, y, t}; }), py::arg("x") = 1.0,
         py::arg("y") = 0.0, py::arg("theta") = std::numbers::pi)
    .def_readwrite("x", &JumpOffset::x)
    .def_readwrite("y", &JumpOffset::y)
    .def_readwrite("theta", &JumpOffset::theta);

  py::class_<PlantParams>(m, "PlantParams")
    .def(py::init<double, JumpOffset, Actuation>(), py::arg("theta_star"), py::arg("jump") = JumpOffset{},
         py::arg("actuation") = Actuation::under)
    .def_static("standard", &PlantParams::standard)
    .def_property_readonly("theta_star", &PlantParams::theta_star)
    .def_property_readonly("jump", &PlantParams::jump)
    .def_property_readonly("actuation", &PlantParams::actuation)
    .def("reset_element", &PlantParams::reset_element)
    .def("landing_angle", &PlantParams::landing_angle)
    .def("guard", &PlantParams::guard)
    .def("on_guard", &PlantParams::on_guard, py::arg("theta"), py::arg("tol") = kGuardTol);

  py::class_<Controls>(m, "Controls").def_readonly("u", &Controls::u).def_readonly("omega", &Controls::omega);

  py::class_<CasimirState>(m, "CasimirState")
    .def(py::init([](double C, double alpha, double D, double theta, double mu_theta) {
           return CasimirState{C, alpha, D, theta, mu_theta};
         }),
         py::arg("C"), py::arg("alpha"), py::arg("D"), py::arg("theta"), py::arg("mu_theta"))
    .def_readwrite("C", &CasimirState::C)
    .def_readwrite("alpha", &CasimirState::alpha)
    .def_readwrite("D", &CasimirState::D)
    .def_readwrite("theta", &CasimirState::theta)
    .def_readwrite("mu_theta", &CasimirState::mu_theta);

  py::class_<ReconstructedState>(m, "ReconstructedState")
    .def(py::init([](double x, double y, double theta, double mu_theta) {
           return ReconstructedState{x, y, theta, mu_theta};
         }),
         py::arg("x"), py::arg("y"), py::arg("theta"), py::arg("mu_theta"))
    .def_readwrite("x", &ReconstructedState::x)
    .def_readwrite("y", &ReconstructedState::y)
    .def_readwrite("theta", &ReconstructedState::theta)
    .def_readwrite("mu_theta", &ReconstructedState::mu_theta);

  const PlantParams standard = PlantParams::standard();
  m.def("plant_field", &plant_field, py::arg("g"), py::arg("u"), py::arg("omega"), py::arg("params") = standard,
        py::arg("v") = 0.0);
  m.def("plant_reset", &plant_reset, py::arg("g"), py::arg("params") = standard);
  m.def("restricted_hamiltonian", &restricted_hamiltonian);
  m.def("optimal_controls", &optimal_controls);
  m.def("reduced_field", [](const Momentum & mu, double q) { return Eigen::Vector4d(reduced_field({mu, {q}})); },
        py::arg("mu"), py::arg("q"));
  m.def("costate_jump", &costate_jump, py::arg("mu"), py::arg("branch"), py::arg("params") = standard);
  m.def("costate_jump_inverse", &costate_jump_inverse, py::arg("mu"), py::arg("branch"), py::arg("params") = standard);
  m.def("casimir", &casimir);
  m.def("casimir_chart", &casimir_chart, py::arg("mu"), py::arg("theta"));
  m.def("momentum_from_chart", &momentum_from_chart);
  m.def("casimir_reduced_field", &casimir_reduced_field);
  m.def("casimir_reduced_reset", &casimir_reduced_reset, py::arg("state"), py::arg("branch"), py::arg("params") = standard);
  m.def("planar_hamiltonian", &planar_hamiltonian, py::arg("theta"), py::arg("mu_theta"), py::arg("C"), py::arg("D"));
  m.def("reconstructed_field", &reconstructed_field, py::arg("state"), py::arg("C"), py::arg("D"));
  m.def("reconstructed_reset", &reconstructed_reset, py::arg("state"), py::arg("branch"), py::arg("C"), py::arg("D"),
        py::arg("params") = standard);
  m.def("full_hamiltonian", &full_hamiltonian);
  m.def("full_pmp_field", &full_pmp_field);
  m.def("full_pmp_jump", &full_pmp_jump, py::arg("state"), py::arg("branch"), py::arg("params") = standard);

  py::class_<QuadraticTerminalCost>(m, "QuadraticTerminalCost")
    .def(py::init([](double x, double y, double theta, double kappa) { return QuadraticTerminalCost{x, y, theta, kappa}; }),
         py::arg("x_target"), py::arg("y_target"), py::arg("theta_target"), py::arg("kappa") = 1.0)
    .def_readwrite("x_target", &QuadraticTerminalCost::x_target)
    .def_readwrite("y_target", &QuadraticTerminalCost::y_target)
    .def_readwrite("theta_target", &QuadraticTerminalCost::theta_target)
    .def_readwrite("kappa", &QuadraticTerminalCost::kappa)
    .def("__call__", &QuadraticTerminalCost::operator())
    .def("momentum", &QuadraticTerminalCost::momentum);

  m.def("terminal_momentum", [](const GroupElement & g, const py::object & phi) { return terminal_momentum(g, to_terminal_cost(phi)); },
        py::arg("g"), py::arg("phi"));

  m.def(
    "simulate_reduced",
    [](const Momentum & mu, double q, double t0, double tf, const PlantParams & params, const ExecConfig & exec,
       const std::vector<Branch> & branches, Branch fallback) {
      State x0(4);
      x0 << mu.mu_x, mu.mu_y, mu.mu_theta, q;
      return execute(reduced_system(params), x0, t0, tf, exec, to_policy(branches, fallback));
    },
    py::arg("mu"), py::arg("q"), py::arg("t0"), py::arg("tf"), py::arg("params") = standard, py::arg("exec") = ExecConfig{},
    py::arg("branches") = std::vector<Branch>{}, py::arg("fallback") = Branch::plus,
    "Reduced (mu_x, mu_y, mu_theta, q) system.");

  m.def(
    "simulate_extremal",
    [](const GroupElement & g, const Momentum & mu, double t0, double tf, const PlantParams & params,
       const ExecConfig & exec, const std::vector<Branch> & branches, Branch fallback) {
      State x0(7);
      x0 << g.x(), g.y(), g.theta(), mu.mu_x, mu.mu_y, mu.mu_theta, 0.0;
      return execute(extremal_system(params), x0, t0, tf, exec, to_policy(branches, fallback));
    },
    py::arg("g"), py::arg("mu"), py::arg("t0"), py::arg("tf"), py::arg("params") = standard, py::arg("exec") = ExecConfig{},
    py::arg("branches") = std::vector<Branch>{}, py::arg("fallback") = Branch::plus,
    "Plant under the optimal controls with co-states: (x, y, theta, mu_x, mu_y, mu_theta, cost).");

  m.def(
    "simulate_reconstructed",
    [](const GroupElement & g, double mu_theta, double C, double D, double t0, double tf, const PlantParams & params,
       const ExecConfig & exec, std::size_t depth) {
      State x0(5);
      x0 << g.x(), g.y(), g.theta(), mu_theta, 0.0;
      return execute_tree(reconstructed_system(C, D, params), x0, t0, tf, exec, depth);
    },
    py::arg("g"), py::arg("mu_theta"), py::arg("C"), py::arg("D"), py::arg("t0"), py::arg("tf"),
    py::arg("params") = standard, py::arg("exec") = ExecConfig{}, py::arg("depth") = 0,
    "Branch tree of the (x, y, theta, mu_theta, cost) system; forks at the first `depth` resets.");

  // --- solver ------------------------------------------------------------------
  py::class_<SolveConfig>(m, "SolveConfig")
    .def(py::init([](double tol, std::size_t max_iters, double relaxation, const ExecConfig & exec) {
           SolveConfig c{tol, max_iters, relaxation, exec};
           c.validate();
           return c;
         }),
         py::arg("tol") = 1e-6, py::arg("max_iters") = 50, py::arg("relaxation") = 1.0, py::arg("exec") = ExecConfig{})
    .def_readwrite("tol", &SolveConfig::tol)
    .def_readwrite("max_iters", &SolveConfig::max_iters)
    .def_readwrite("relaxation", &SolveConfig::relaxation)
    .def_readwrite("exec", &SolveConfig::exec);

  py::class_<SolveIteration>(m, "SolveIteration")
    .def_readonly("guess", &SolveIteration::guess)
    .def_readonly("backward", &SolveIteration::backward)
    .def_readonly("forward", &SolveIteration::forward)
    .def_readonly("achieved", &SolveIteration::achieved)
    .def_readonly("delta", &SolveIteration::delta)
    .def_readonly("events_agree", &SolveIteration::events_agree);

  py::class_<SolveReport>(m, "SolveReport")
    .def_readonly("iterations", &SolveReport::iterations)
    .def_readonly("converged", &SolveReport::converged)
    .def_readonly("final_cost", &SolveReport::final_cost)
    .def_readonly("running_cost", &SolveReport::running_cost)
    .def_readonly("terminal_cost", &SolveReport::terminal_cost)
    .def_readonly("event_mismatch", &SolveReport::event_mismatch)
    .def_property_readonly("last", &SolveReport::last);

  m.def("group_distance", &group_distance);
  m.def("chart_interpolate", &chart_interpolate);
  m.def(
    "solve",
    [](const GroupElement & g_init, double t0, double tf, const py::object & phi, const GroupElement & guess,
       const SolveConfig & config, const PlantParams & params, const std::vector<Branch> & branches, Branch fallback) {
      OcpProblem problem{g_init, t0, tf, to_terminal_cost(phi), params, to_policy(branches, fallback)};
      return solve(problem, guess, config);
    },
    py::arg("g_init"), py::arg("t0"), py::arg("tf"), py::arg("phi"), py::arg("guess"), py::arg("config") = SolveConfig{},
    py::arg("params") = standard, py::arg("branches") = std::vector<Branch>{}, py::arg("fallback") = Branch::plus,
    "Forward-backward fixed-point solve; phi is a QuadraticTerminalCost or any callable GroupElement -> float.");
}
