#include "flexagg/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flexagg/compact.hpp"
#include "flexagg/disagg.hpp"
#include "flexagg/io.hpp"
#include "flexagg/mps.hpp"
#include "flexagg/parallel.hpp"

#ifndef FLEXAGG_VERSION
#define FLEXAGG_VERSION "0.0.0"
#endif

namespace flexagg::run {

using json = nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Apa: return "aggregate-p";
    case Mode::Arpa: return "aggregate-pq";
    case Mode::Pd: return "disaggregate";
    case Mode::Verify: return "verify";
    case Mode::Scan: return "scan-pq";
  }
  return "?";
}

LogLevel parse_log_level(const std::string& s) {
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw Error(ErrorCode::ConfigError, "log-level: expected error|warn|info|debug, got '" + s + "'");
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Infeasible:
    case ErrorCode::InfeasibleParams: return 2;
    case ErrorCode::NonConvergence:
    case ErrorCode::SingularAdmittance:
    case ErrorCode::BigMTooSmall:
    case ErrorCode::MaxRounds:
    case ErrorCode::TooManyBinaries:
    case ErrorCode::NumericalFailure: return 3;
    default: return 1;
  }
}

namespace {

void log(const RunConfig& cfg, LogLevel level, const std::string& msg) {
  if (level > cfg.log_level) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << '[' << names[static_cast<int>(level)] << "] " << msg << '\n';
}

/// 12 significant digits, like the CSV writer.
double r12(double v) { return std::isfinite(v) ? std::stod(io::fmt(v)) : v; }

json r12(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(r12(x));
  return a;
}

std::string in_out(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out) / name).string();
}

const char* primary_name(Mode m) {
  switch (m) {
    case Mode::Apa: return "intervals.csv";
    case Mode::Arpa: return "ellipses.csv";
    case Mode::Pd: return "dispatch.csv";
    case Mode::Verify: return "report.json";
    case Mode::Scan: return "grid.csv";
  }
  return "out";
}

std::string primary(const RunConfig& cfg) { return in_out(cfg, primary_name(cfg.mode)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

void check_common(const RunConfig& cfg) {
  require(!cfg.ders.empty(), "--ders is required");
  require(!cfg.out.empty(), "--out is required");
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  require(!ec && fs::is_directory(cfg.out), "out: cannot create directory '" + cfg.out + "'");
  require(cfg.horizon >= 1, "horizon must be at least 1");
  require(cfg.dt > 0.0, "dt must be positive");
  require(cfg.threads >= 1, "threads must be at least 1");
  require(cfg.aro.eps > 0.0, "tol must be positive");
  require(cfg.aro.big_m >= 0.0, "big-m must be nonnegative (0 selects automatic sizing)");
}

compact::CompactModel load_model(const RunConfig& cfg, int horizon) {
  const der::Fleet fleet = io::read_fleet(cfg.ders);
  if (cfg.feeder.empty()) return compact::build_copper_plate(fleet, horizon, cfg.dt);
  const pf::Grid grid(io::read_feeder(cfg.feeder));
  return compact::build_model(grid, fleet, horizon, cfg.dt);
}

json file_entry(const std::string& role, const std::string& path) {
  return {{"role", role}, {"path", path}, {"fnv1a", io::hex64(io::fnv1a(io::read_file(path)))}};
}

json options_json(const RunConfig& cfg) {
  return {{"horizon", cfg.horizon},
          {"dt_h", cfg.dt},
          {"tol", cfg.aro.eps},
          {"big_m", cfg.aro.big_m == 0.0 ? json("auto") : json(cfg.aro.big_m)},
          {"big_m_retries", cfg.aro.big_m_retries},
          {"max_rounds", cfg.aro.max_rounds},
          {"heuristic", cfg.aro.heuristic},
          {"reactive", cfg.aro.reactive},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"lp_feasibility_tol", cfg.aro.lp.tol.feasibility},
          {"lp_optimality_tol", cfg.aro.lp.tol.optimality}};
}

void write_manifest(const RunConfig& cfg, RunResult& res, json options, json notes) {
  json inputs = json::array();
  if (!cfg.feeder.empty()) inputs.push_back(file_entry("feeder", cfg.feeder));
  inputs.push_back(file_entry("ders", cfg.ders));
  for (auto [role, path] : {std::pair{"cost", &cfg.cost}, {"p_reg", &cfg.p_reg},
                            {"intervals", &cfg.intervals}, {"ellipses", &cfg.ellipses}}) {
    if (!path->empty()) inputs.push_back(file_entry(role, *path));
  }
  json outputs = json::array();
  for (const auto& p : res.outputs) outputs.push_back(file_entry("output", p));
  const json m = {{"tool", "flexagg"},       {"version", FLEXAGG_VERSION},
                  {"command", to_string(cfg.mode)}, {"inputs", inputs},
                  {"options", options},      {"outputs", outputs},
                  {"summary", res.summary},  {"notes", notes},
                  {"network", cfg.feeder.empty() ? "copper-plate" : "linearized"}};
  const std::string path =
      in_out(cfg, fs::path(primary_name(cfg.mode)).stem().string() + ".manifest.json");
  io::write_file(path, m.dump(2) + "\n");
  res.outputs.push_back(path);
}

void write_jsonl(const std::string& path, const std::vector<json>& lines) {
  std::string body;
  for (const auto& l : lines) body += l.dump() + "\n";
  io::write_file(path, body);
}

const char* phase_label(const Terminal& t) {
  static const char* wye[] = {"a", "b", "c"};
  static const char* delta[] = {"ab", "bc", "ca"};
  return t.kind == Connection::Wye ? wye[t.phase] : delta[t.phase];
}

RunResult run_apa(const RunConfig& cfg) {
  const auto model = load_model(cfg, cfg.horizon);
  log(cfg, LogLevel::Info,
      "model: " + std::to_string(model.dim()) + " columns, " + std::to_string(model.num_rows()) +
          " rows");
  const auto r = aro::solve_apa(model, cfg.aro);
  RunResult res;
  const std::string unit = cfg.aro.reactive ? "MVar" : "MW";
  const std::string sym = cfg.aro.reactive ? "q" : "p";
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < model.horizon; ++t) rows.push_back({double(t), r.lo[t], r.hi[t]});
  io::write_csv(primary(cfg), {"t", sym + "_lo_" + unit, sym + "_hi_" + unit}, rows);
  res.outputs.push_back(primary(cfg));

  std::vector<json> lines;
  for (const auto& l : r.log) {
    lines.push_back({{"command", to_string(cfg.mode)}, {"round", l.round},
                     {"f_master", r12(l.f_master)}, {"f_sub", r12(l.f_sub)}, {"xi", l.xi},
                     {"big_m", r12(l.big_m)}});
    log(cfg, LogLevel::Debug,
        "round " + std::to_string(l.round) + ": f_M = " + io::fmt(l.f_master) +
            ", f_S = " + io::fmt(l.f_sub));
  }
  const std::string log_path = in_out(cfg, "log.jsonl");
  write_jsonl(log_path, lines);
  res.outputs.push_back(log_path);

  json pool = json::array();
  for (const auto& s : r.pool) pool.push_back({{"xi", s.xi}, {"origin", s.origin}});
  const double e_af = aro::aggregate_flexibility(r.lo, r.hi, cfg.dt);
  res.summary = {{"E_af", r12(e_af)}, {"E_af_unit", cfg.aro.reactive ? "MVArh" : "MWh"},
                 {"total_width", r12(r.objective)}, {"rounds", r.log.size()}, {"pool", pool}};
  json notes = json::array();
  if (cfg.aro.heuristic) notes.push_back("Method 1 ordering rows (as-printed baseline)");
  write_manifest(cfg, res, options_json(cfg), notes);
  return res;
}

RunResult run_arpa(const RunConfig& cfg) {
  const auto model = load_model(cfg, cfg.horizon);
  aro::ArpaOptions opt;
  opt.aro = cfg.aro;
  opt.thetas = cfg.thetas;
  opt.n_squares = cfg.n_squares;
  opt.threads = cfg.threads;
  const auto s = aro::solve_arpa(model, opt);
  RunResult res;
  std::vector<std::vector<double>> rows, points;
  json degenerate = json::array(), area = json::array();
  const double pi = std::acos(-1.0);
  for (int t = 0; t < model.horizon; ++t) {
    const auto& e = s.periods[t];
    const auto& Y = e.shape.Y;
    rows.push_back({double(t), e.shape.pc, e.shape.qc, Y(0, 0), Y(1, 1), Y(0, 1), e.theta});
    for (int k = 0; k < 64; ++k) {
      const double a = 2.0 * pi * k / 64.0;
      const Eigen::Vector2d at = e.shape.point({std::cos(a), std::sin(a)});
      points.push_back({double(t), double(k), at[0], at[1]});
    }
    if (e.degenerate) {
      degenerate.push_back(t);
      log(cfg, LogLevel::Warn,
          "period " + std::to_string(t) + ": degenerate ellipse (flexibility is one-dimensional)");
    }
    area.push_back(r12(e.shape.area()));
  }
  io::write_csv(primary(cfg), {"t", "pc_MW", "qc_MVar", "y1", "y2", "y3", "theta"}, rows);
  res.outputs.push_back(primary(cfg));
  const std::string pts = in_out(cfg, "ellipses_points.csv");
  io::write_csv(pts, {"t", "k", "p_MW", "q_MVar"}, points);
  res.outputs.push_back(pts);

  std::vector<json> lines;
  for (const auto& l : s.log) {
    lines.push_back({{"command", to_string(cfg.mode)}, {"round", l.round},
                     {"f_master", r12(l.f_master)}, {"f_sub", r12(l.f_sub)},
                     {"point", l.point}});
  }
  const std::string log_path = in_out(cfg, "log.jsonl");
  write_jsonl(log_path, lines);
  res.outputs.push_back(log_path);

  const bool rotated = cfg.thetas.size() > 1 || cfg.thetas[0] != 0.0;
  res.summary = {{"objective_sum_log_axes", r12(s.objective)},
                 {"theta", r12(s.theta)},
                 {"rounds", s.log.size()},
                 {"area", area},
                 {"degenerate_periods", degenerate},
                 {"parameterization", rotated ? "fixed-rotation" : "axis-aligned"}};
  json opts = options_json(cfg);
  opts["thetas"] = r12(cfg.thetas);
  opts["n_squares"] = cfg.n_squares;
  json notes = json::array();
  notes.push_back(
      "shape matrix restricted to a common fixed rotation with free semi-axes (not a general PSD "
      "matrix)");
  write_manifest(cfg, res, opts, notes);
  return res;
}

std::vector<std::vector<double>> read_p_reg(const std::string& path, bool& has_q) {
  try {
    auto rows = io::read_csv(path, {"t", "p_MW", "q_MVar"});
    has_q = true;
    return rows;
  } catch (const Error&) {
    has_q = false;
    return io::read_csv(path, {"t", "p_MW"});
  }
}

RunResult run_pd(const RunConfig& cfg) {
  require(!cfg.p_reg.empty(), "--p-reg is required");
  bool has_q = false;
  const auto reg = read_p_reg(cfg.p_reg, has_q);
  require(!reg.empty(), cfg.p_reg + ": no rows");
  const int T = static_cast<int>(reg.size());
  const auto model = load_model(cfg, T);
  std::vector<double> p(T), q(T);
  for (int t = 0; t < T; ++t) {
    p[t] = reg[t][1];
    if (has_q) q[t] = reg[t][2];
  }
  std::optional<disagg::CostParams> cost;
  if (!cfg.cost.empty()) cost = disagg::read_cost(cfg.cost);
  disagg::PdOptions opt;
  opt.lp = cfg.aro.lp;
  opt.segments = cfg.segments;
  opt.explain = cfg.explain;
  const auto d = disagg::solve_pd(model, p, has_q ? &q : nullptr, cost ? &*cost : nullptr, opt);
  if (!d.feasible) {
    std::string why;
    for (const auto& c : d.conflict) {
      why += "\n  " + c.device + " " + c.tag +
             (c.period >= 0 ? " (t=" + std::to_string(c.period) + ")" : "");
    }
    throw Error(ErrorCode::Infeasible,
                "regulation trajectory cannot be dispatched" +
                    (why.empty() ? std::string() : "; conflicting rows:" + why));
  }

  const auto& lay = model.layout;
  std::vector<std::string> header{"t", "p0_MW", "q0_MVar"};
  for (const auto& v : lay.vars) {
    header.push_back(lay.device_ids[v.device] + "." + phase_label(lay.terminals[v.terminal]) +
                     "." + flexagg::to_string(v.role));
  }
  for (std::size_t i = 0; i < d.soc.size(); ++i) {
    if (!d.soc[i].empty()) header.push_back(lay.device_ids[i] + ".soc_MWh");
  }
  for (std::size_t i = 0; i < d.temperature.size(); ++i) {
    if (!d.temperature[i].empty()) header.push_back(lay.device_ids[i] + ".temp_C");
  }
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < T; ++t) {
    std::vector<double> r{double(t), d.p0[t], d.q0[t]};
    for (int k = 0; k < lay.nx(); ++k) r.push_back(d.x[lay.index(t, k)]);
    for (const auto& s : d.soc) {
      if (!s.empty()) r.push_back(s[t]);
    }
    for (const auto& s : d.temperature) {
      if (!s.empty()) r.push_back(s[t]);
    }
    rows.push_back(r);
  }
  io::write_csv(primary(cfg), header, rows);
  RunResult res;
  res.outputs.push_back(primary(cfg));
  res.summary = {{"status", lp::to_string(d.status)},
                 {"objective_pwl", r12(d.objective_pwl)},
                 {"objective_exact", r12(d.objective_exact)},
                 {"tracks_q", has_q}};
  json opts = options_json(cfg);
  opts["segments"] = cfg.segments;
  write_manifest(cfg, res, opts, json::array());
  return res;
}

RunResult run_verify(const RunConfig& cfg) {
  require(!cfg.intervals.empty(), "--intervals is required");
  require(cfg.samples >= 0, "n must be nonnegative");
  const auto iv = io::read_csv(cfg.intervals, {"t", "p_lo_MW", "p_hi_MW"});
  require(!iv.empty(), cfg.intervals + ": no rows");
  const int T = static_cast<int>(iv.size());
  const auto model = load_model(cfg, T);
  std::vector<double> lo(T), hi(T);
  for (int t = 0; t < T; ++t) {
    lo[t] = iv[t][1];
    hi[t] = iv[t][2];
  }
  const auto mc = disagg::monte_carlo_verify(model, lo, hi, cfg.samples, cfg.seed, cfg.threads,
                                             cfg.aro.lp);
  json failures = json::array();
  for (const auto& f : mc.failures) failures.push_back(r12(f));
  json report = {{"n", mc.n},
                 {"feasible_count", mc.feasible_count},
                 {"feasible_rate", r12(mc.feasible_rate())},
                 {"seed", cfg.seed},
                 {"failures", failures}};
  if (cfg.check_vertices && T <= 12) {
    const int nv = 1 << T;
    std::vector<char> ok(nv, 0);
    parallel_for(nv, cfg.threads, [&](int mask) {
      std::vector<double> p(T);
      for (int t = 0; t < T; ++t) p[t] = (mask >> t) & 1 ? hi[t] : lo[t];
      disagg::PdOptions o;
      o.lp = cfg.aro.lp;
      ok[mask] = disagg::solve_pd(model, p, nullptr, nullptr, o).feasible;
    });
    int good = 0;
    for (char c : ok) good += c;
    report["vertices"] = {{"checked", nv}, {"feasible", good}};
  }
  io::write_file(primary(cfg), report.dump(2) + "\n");
  if (mc.feasible_count < mc.n) {
    log(cfg, LogLevel::Warn,
        std::to_string(mc.n - mc.feasible_count) + " of " + std::to_string(mc.n) +
            " sampled trajectories could not be dispatched");
  }
  RunResult res;
  res.outputs.push_back(primary(cfg));
  res.summary = report;
  res.summary.erase("failures");
  json opts = options_json(cfg);
  opts["n"] = cfg.samples;
  write_manifest(cfg, res, opts, json::array());
  return res;
}

/// Largest apparent power a device can exchange in period 0, phase-summed.
double capacity(const der::Fleet& fleet) {
  double cap = 0.0;
  for (const auto& d : fleet.devices) {
    double s = 0.0;
    switch (d.kind) {
      case der::DeviceKind::PV: s = d.pv.s_max.at(0); break;
      case der::DeviceKind::ES: s = d.es.s_max.at(0); break;
      case der::DeviceKind::DCL: s = d.dcl.p_max.at(0) * std::hypot(1.0, d.dcl.eta); break;
      case der::DeviceKind::HVAC: s = d.hvac.p_max.at(0) * std::hypot(1.0, d.hvac.eta); break;
    }
    cap += s * static_cast<double>(std::max<std::size_t>(1, d.phases.size()));
  }
  return cap;
}

RunResult run_scan(const RunConfig& cfg) {
  require(cfg.res > 0.0, "res must be positive");
  const int T = cfg.horizon;
  require(cfg.period >= 0 && cfg.period < T, "period must lie in [0, horizon)");
  require(T == 1 || !cfg.ellipses.empty(),
          "scanning one period of T > 1 needs --ellipse to fix the other periods");
  const auto model = load_model(cfg, T);

  std::optional<Ellipse> ellipse;
  std::vector<Eigen::Vector2d> centers;
  if (!cfg.ellipses.empty()) {
    const auto rows =
        io::read_csv(cfg.ellipses, {"t", "pc_MW", "qc_MVar", "y1", "y2", "y3", "theta"});
    require(static_cast<int>(rows.size()) >= T,
            cfg.ellipses + ": expected " + std::to_string(T) + " periods");
    for (int t = 0; t < T; ++t) centers.emplace_back(rows[t][1], rows[t][2]);
    const auto& r = rows[cfg.period];
    Ellipse e;
    e.pc = r[1];
    e.qc = r[2];
    e.Y << r[3], r[5], r[5], r[4];
    ellipse = e;
  }
  const double cap = capacity(model.fleet);
  auto range = [&](const std::optional<std::array<double, 2>>& given, double center) {
    if (given) {
      require((*given)[0] <= (*given)[1], "range lower end exceeds upper end");
      return *given;
    }
    const double half = std::ceil(cap / cfg.res) * cfg.res;
    return std::array<double, 2>{center - half, center + half};
  };
  const auto pr = range(cfg.p_range, ellipse ? ellipse->pc : model.g[cfg.period]);
  const auto qr = range(cfg.q_range, ellipse ? ellipse->qc : model.h[cfg.period]);

  const auto scan = disagg::pq_grid_scan(model, pr[0], pr[1], qr[0], qr[1], cfg.res, ellipse,
                                         cfg.threads, cfg.aro.lp, cfg.period, centers);
  std::vector<std::string> header{"p_MW", "q_MVar", "feasible"};
  if (ellipse) header.push_back("inside_ellipse");
  std::vector<std::vector<double>> rows;
  int feasible = 0;
  for (const auto& g : scan.points) {
    std::vector<double> r{g.p, g.q, g.feasible ? 1.0 : 0.0};
    if (ellipse) r.push_back(g.inside ? 1.0 : 0.0);
    rows.push_back(r);
    feasible += g.feasible;
  }
  io::write_csv(primary(cfg), header, rows);
  RunResult res;
  res.outputs.push_back(primary(cfg));
  res.summary = {{"points", scan.points.size()}, {"feasible", feasible}, {"period", cfg.period}};
  if (ellipse) {
    res.summary["inside_ellipse"] = scan.inside;
    res.summary["inside_infeasible"] = scan.inside_infeasible;
    if (scan.inside_infeasible > 0) {
      log(cfg, LogLevel::Warn,
          std::to_string(scan.inside_infeasible) + " grid points inside the ellipse are infeasible");
    }
  }
  json opts = options_json(cfg);
  opts["res"] = cfg.res;
  opts["period"] = cfg.period;
  opts["p_range"] = r12(std::vector<double>{pr[0], pr[1]});
  opts["q_range"] = r12(std::vector<double>{qr[0], qr[1]});
  json notes = json::array();
  if (T > 1) notes.push_back("periods other than the scanned one track the ellipse centers");
  write_manifest(cfg, res, opts, notes);
  return res;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  check_common(cfg);
  log(cfg, LogLevel::Info, std::string("running ") + to_string(cfg.mode));
  switch (cfg.mode) {
    case Mode::Apa: return run_apa(cfg);
    case Mode::Arpa: return run_arpa(cfg);
    case Mode::Pd: return run_pd(cfg);
    case Mode::Verify: return run_verify(cfg);
    case Mode::Scan: return run_scan(cfg);
  }
  throw Error(ErrorCode::ConfigError, "unknown mode");
}

RunResult solve_file(const std::string& mps_path, const std::string& out,
                     const lp::MilpOptions& opt) {
  std::istringstream in(io::read_file(mps_path));
  const lp::MilpProblem prob = lp::read_mps(in);
  const lp::Solution s =
      prob.binaries.empty() ? lp::solve_lp(prob.lp, opt.lp) : lp::solve_milp(prob, opt);
  if (s.status == lp::Status::Infeasible || s.status == lp::Status::Unbounded) {
    throw Error(ErrorCode::Infeasible, mps_path + ": " + lp::to_string(s.status));
  }
  if (s.status != lp::Status::Optimal) {
    throw Error(ErrorCode::NumericalFailure, mps_path + ": " + lp::to_string(s.status));
  }
  RunResult res;
  res.summary = {{"status", lp::to_string(s.status)},
                 {"objective", r12(s.objective)},
                 {"columns", prob.lp.num_cols()},
                 {"rows", prob.lp.num_rows()},
                 {"binaries", prob.binaries.size()}};
  if (!out.empty()) {
    std::string body = "column,value\n";
    for (int j = 0; j < prob.lp.num_cols(); ++j) {
      const auto& names = prob.lp.col_names();
      const std::string name = j < static_cast<int>(names.size()) && !names[j].empty()
                                   ? names[j]
                                   : "C" + std::to_string(j + 1);
      body += name + "," + io::fmt(s.primal[j]) + "\n";
    }
    io::write_file(out, body);
    res.outputs.push_back(out);
  }
  return res;
}

}  // namespace flexagg::run
