#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

#include "flexagg/aro.hpp"
#include "flexagg/compact.hpp"
#include "flexagg/disagg.hpp"
#include "flexagg/io.hpp"
#include "flexagg/run.hpp"

namespace py = pybind11;
using namespace flexagg;

namespace {

compact::CompactModel load_model(const std::string& ders, const std::string& feeder, int horizon,
                                 double dt) {
  const der::Fleet fleet = io::read_fleet(ders);
  if (feeder.empty()) return compact::build_copper_plate(fleet, horizon, dt);
  return compact::build_model(pf::Grid(io::read_feeder(feeder)), fleet, horizon, dt);
}

aro::AroOptions aro_options(double tol, double big_m, int max_rounds) {
  aro::AroOptions o;
  o.eps = tol;
  o.big_m = big_m;
  o.max_rounds = max_rounds;
  return o;
}

py::dict apa(const compact::CompactModel& m, double tol, double big_m, int max_rounds,
             bool heuristic, bool reactive) {
  auto o = aro_options(tol, big_m, max_rounds);
  o.heuristic = heuristic;
  o.reactive = reactive;
  const auto r = aro::solve_apa(m, o);
  py::list pool;
  for (const auto& s : r.pool) pool.append(py::make_tuple(s.xi, s.origin));
  py::dict d;
  d["lo"] = r.lo;
  d["hi"] = r.hi;
  d["objective"] = r.objective;
  d["rounds"] = r.log.size();
  d["pool"] = pool;
  return d;
}

py::dict arpa(const compact::CompactModel& m, std::vector<double> thetas, int n_squares,
              double tol, double big_m, int max_rounds, int threads) {
  aro::ArpaOptions o;
  o.aro = aro_options(tol, big_m, max_rounds);
  o.thetas = std::move(thetas);
  o.n_squares = n_squares;
  o.threads = threads;
  const auto s = aro::solve_arpa(m, o);
  py::list periods;
  for (const auto& e : s.periods) {
    py::dict p;
    p["center"] = Eigen::Vector2d(e.shape.pc, e.shape.qc);
    p["Y"] = e.shape.Y;
    p["a1"] = e.a1;
    p["a2"] = e.a2;
    p["theta"] = e.theta;
    p["degenerate"] = e.degenerate;
    p["area"] = e.shape.area();
    periods.append(p);
  }
  py::dict d;
  d["periods"] = periods;
  d["objective"] = s.objective;
  d["theta"] = s.theta;
  d["rounds"] = s.log.size();
  return d;
}

py::dict dispatch(const compact::CompactModel& m, const std::vector<double>& p,
                  std::optional<std::vector<double>> q, const std::string& cost_path,
                  int segments) {
  std::optional<disagg::CostParams> cost;
  if (!cost_path.empty()) cost = disagg::read_cost(cost_path);
  disagg::PdOptions o;
  o.segments = segments;
  o.explain = true;
  const auto r = disagg::solve_pd(m, p, q ? &*q : nullptr, cost ? &*cost : nullptr, o);
  py::list conflict;
  for (const auto& c : r.conflict) conflict.append(py::make_tuple(c.device, c.tag, c.period));
  py::dict d;
  d["feasible"] = r.feasible;
  d["x"] = r.x;
  d["p0"] = r.p0;
  d["q0"] = r.q0;
  d["objective_pwl"] = r.objective_pwl;
  d["objective_exact"] = r.objective_exact;
  d["conflict"] = conflict;
  return d;
}

py::dict verify(const compact::CompactModel& m, const std::vector<double>& lo,
                const std::vector<double>& hi, int n, std::uint64_t seed, int threads) {
  const auto r = disagg::monte_carlo_verify(m, lo, hi, n, seed, threads);
  py::dict d;
  d["n"] = r.n;
  d["feasible_count"] = r.feasible_count;
  d["feasible_rate"] = r.feasible_rate();
  d["failures"] = r.failures;
  return d;
}

py::object run_command(const std::string& mode, const py::kwargs& kw) {
  static const std::map<std::string, run::Mode> modes = {
      {"aggregate-p", run::Mode::Apa}, {"aggregate-pq", run::Mode::Arpa},
      {"disaggregate", run::Mode::Pd}, {"verify", run::Mode::Verify},
      {"scan-pq", run::Mode::Scan}};
  const auto it = modes.find(mode);
  if (it == modes.end()) throw Error(ErrorCode::ConfigError, "unknown command '" + mode + "'");
  run::RunConfig cfg;
  cfg.mode = it->second;
  for (auto [key, value] : kw) {
    const std::string k = py::str(key);
    if (k == "feeder") cfg.feeder = value.cast<std::string>();
    else if (k == "ders") cfg.ders = value.cast<std::string>();
    else if (k == "horizon") cfg.horizon = value.cast<int>();
    else if (k == "dt") cfg.dt = value.cast<double>();
    else if (k == "out") cfg.out = value.cast<std::string>();
    else if (k == "threads") cfg.threads = value.cast<int>();
    else if (k == "seed") cfg.seed = value.cast<std::uint64_t>();
    else if (k == "tol") cfg.aro.eps = value.cast<double>();
    else if (k == "big_m") cfg.aro.big_m = value.cast<double>();
    else if (k == "method1") cfg.aro.heuristic = value.cast<bool>();
    else if (k == "reactive") cfg.aro.reactive = value.cast<bool>();
    else if (k == "max_rounds") cfg.aro.max_rounds = value.cast<int>();
    else if (k == "thetas") cfg.thetas = value.cast<std::vector<double>>();
    else if (k == "p_reg") cfg.p_reg = value.cast<std::string>();
    else if (k == "cost") cfg.cost = value.cast<std::string>();
    else if (k == "segments") cfg.segments = value.cast<int>();
    else if (k == "intervals") cfg.intervals = value.cast<std::string>();
    else if (k == "samples") cfg.samples = value.cast<int>();
    else if (k == "check_vertices") cfg.check_vertices = value.cast<bool>();
    else if (k == "res") cfg.res = value.cast<double>();
    else if (k == "period") cfg.period = value.cast<int>();
    else if (k == "ellipses") cfg.ellipses = value.cast<std::string>();
    else throw Error(ErrorCode::ConfigError, "unknown option '" + k + "'");
  }
  cfg.log_level = run::LogLevel::Error;
  const auto res = run::run(cfg);
  return py::module_::import("json").attr("loads")(res.summary.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust aggregation of distribution-level DER flexibility";
  py::register_exception<Error>(m, "FlexaggError", PyExc_RuntimeError);

  py::class_<compact::CompactModel>(m, "Model")
      .def_readonly("horizon", &compact::CompactModel::horizon)
      .def_readonly("dt", &compact::CompactModel::dt)
      .def_readonly("D", &compact::CompactModel::D)
      .def_readonly("F", &compact::CompactModel::F)
      .def_readonly("g", &compact::CompactModel::g)
      .def_readonly("h", &compact::CompactModel::h)
      .def_property_readonly("dim", &compact::CompactModel::dim)
      .def_property_readonly("num_rows", &compact::CompactModel::num_rows)
      .def("W", &compact::CompactModel::W)
      .def("w", &compact::CompactModel::w)
      .def("__repr__", [](const compact::CompactModel& c) {
        return "<Model T=" + std::to_string(c.horizon) + " dim=" + std::to_string(c.dim()) +
               " rows=" + std::to_string(c.num_rows()) + ">";
      });

  m.def("load_model", &load_model, py::arg("ders"), py::arg("feeder") = "",
        py::arg("horizon") = 1, py::arg("dt") = 1.0,
        "Compact model from a fleet file and an optional feeder (copper plate when empty).");
  m.def("solve_apa", &apa, py::arg("model"), py::arg("tol") = 1e-6, py::arg("big_m") = 0.0,
        py::arg("max_rounds") = 0, py::arg("method1") = false, py::arg("reactive") = false);
  m.def("solve_arpa", &arpa, py::arg("model"), py::arg("thetas") = std::vector<double>{0.0},
        py::arg("n_squares") = 2, py::arg("tol") = 1e-6, py::arg("big_m") = 0.0,
        py::arg("max_rounds") = 0, py::arg("threads") = 1);
  m.def("aggregate_flexibility", &aro::aggregate_flexibility, py::arg("lo"), py::arg("hi"),
        py::arg("dt"));
  m.def("solve_pd", &dispatch, py::arg("model"), py::arg("p"), py::arg("q") = py::none(),
        py::arg("cost") = "", py::arg("segments") = 16);
  m.def("monte_carlo_verify", &verify, py::arg("model"), py::arg("lo"), py::arg("hi"),
        py::arg("n") = 200, py::arg("seed") = 42, py::arg("threads") = 1);
  m.def("run", &run_command, py::arg("command"),
        "Runs a CLI command with keyword options and returns its JSON summary.");
  m.attr("__version__") = FLEXAGG_VERSION;
}
