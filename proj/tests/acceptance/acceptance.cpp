// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flexagg/aro.hpp"
#include "flexagg/compact.hpp"
#include "flexagg/disagg.hpp"
#include "flexagg/io.hpp"
#include "flexagg/run.hpp"
#include "support/aro_oracles.hpp"
#include "support/lp_oracles.hpp"
#include "support/toy_models.hpp"

using namespace flexagg;
namespace fs = std::filesystem;

namespace {

const std::string kData = FLEXAGG_DATA_DIR;
const double kPi = std::acos(-1.0);
// 126-bus reference feeder with 5.44 MWh of storage. The feeder data is
// proprietary, so these are reported for context only.
const double kReferenceApaMWh = 35.39;
const double kReferenceMethod1MWh = 32.90;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

compact::CompactModel toy8(int T) {
  const pf::Grid grid(io::read_feeder(kData + "/feeder_toy8.json"));
  return compact::build_model(grid, io::read_fleet(kData + "/fleet_toy8.json"), T, 1.0);
}

compact::CompactModel two_bus(int T) {
  const pf::Grid grid(io::read_feeder(kData + "/feeder_2bus.json"));
  return compact::build_model(grid, io::read_fleet(kData + "/fleet_2bus.json"), T, 1.0);
}

void ccg_matches_deterministic_equivalent(Outcome& o) {
  for (int T : {2, 3, 4}) {
    const auto m = toy8(T);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = aro::solve_apa(m);
    const double secs = seconds_since(t0);
    const double de = oracle::deterministic_equivalent_width(m);
    const double diff = std::abs(r.objective - de);
    o.detail << " T=" << T << ": ccg " << io::fmt(r.objective) << " de " << io::fmt(de) << " |d| "
             << diff << " " << secs << "s;";
    o.require(diff <= 1e-6, "width differs at T=" + std::to_string(T));
    o.require(secs <= 60.0, "too slow at T=" + std::to_string(T));
  }
}

void monte_carlo_soundness(Outcome& o) {
  const auto m = toy8(4);
  const auto r = aro::solve_apa(m);
  const auto t0 = std::chrono::steady_clock::now();
  const auto mc = disagg::monte_carlo_verify(m, r.lo, r.hi, 200, 42);
  const double secs = seconds_since(t0);
  o.detail << " toy8 T=4: " << mc.feasible_count << "/" << mc.n << " feasible, " << secs << "s";
  o.require(mc.feasible_rate() == 1.0, "infeasible samples");
  o.require(secs <= 120.0, "too slow");
}

void vertex_soundness(Outcome& o) {
  for (const auto& [name, build] :
       {std::pair<std::string, std::function<compact::CompactModel(int)>>{"toy8", toy8},
        {"2bus", two_bus}}) {
    for (int T = 1; T <= 4; ++T) {
      const auto m = build(T);
      const auto r = aro::solve_apa(m);
      int good = 0;
      for (int mask = 0; mask < (1 << T); ++mask) {
        std::vector<double> p(T);
        for (int t = 0; t < T; ++t) p[t] = (mask >> t) & 1 ? r.hi[t] : r.lo[t];
        good += disagg::solve_pd(m, p).feasible;
      }
      o.detail << " " << name << " T=" << T << ": " << good << "/" << (1 << T) << ";";
      o.require(good == (1 << T), name + " vertex infeasible at T=" + std::to_string(T));
    }
  }
}

void baseline_dominance(Outcome& o) {
  o.detail << " reference feeder (not reproducible here): " << kReferenceApaMWh << " vs "
           << kReferenceMethod1MWh << " MWh;";
  aro::AroOptions m1;
  m1.heuristic = true;
  for (const auto& [name, build] :
       {std::pair<std::string, std::function<compact::CompactModel(int)>>{"toy8", toy8},
        {"2bus", two_bus}}) {
    for (int T : {2, 3, 4}) {
      const auto m = build(T);
      const auto r = aro::solve_apa(m);
      const double apa = aro::aggregate_flexibility(r.lo, r.hi, 1.0);
      const auto h = aro::solve_apa(m, m1);
      const double base = aro::aggregate_flexibility(h.lo, h.hi, 1.0);
      o.detail << " " << name << " T=" << T << ": " << io::fmt(apa) << " vs " << io::fmt(base)
               << ";";
      o.require(apa >= base - 1e-6, name + " baseline exceeds APA at T=" + std::to_string(T));
      if (name == "toy8" && T == 2) {
        o.require(apa > base, "no strict improvement on the designated instance (toy8, T=2)");
      }
    }
  }
}

/// Scans every period at res 0.1 with the other periods at their centers and
/// draws `samples` joint unit-disk trajectories.
void check_ellipses(Outcome& o, const std::string& name, const compact::CompactModel& m,
                    double half_range, int samples, std::mt19937_64& rng) {
  const auto s = aro::solve_arpa(m);
  const int T = m.horizon;
  std::vector<Eigen::Vector2d> centers;
  for (const auto& e : s.periods) centers.emplace_back(e.shape.pc, e.shape.qc);
  int inside = 0, bad = 0;
  for (int t = 0; t < T; ++t) {
    const auto& c = centers[t];
    const auto scan = disagg::pq_grid_scan(m, c[0] - half_range, c[0] + half_range,
                                           c[1] - half_range, c[1] + half_range, 0.1,
                                           s.periods[t].shape, 1, {}, t, centers);
    inside += scan.inside;
    bad += scan.inside_infeasible;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int dispatched = 0;
  for (int k = 0; k < samples; ++k) {
    std::vector<double> p(T), q(T);
    for (int t = 0; t < T; ++t) {
      const double r = std::sqrt(u(rng)), a = 2.0 * kPi * u(rng);
      const Eigen::Vector2d at = s.periods[t].shape.point({r * std::cos(a), r * std::sin(a)});
      p[t] = at[0];
      q[t] = at[1];
    }
    dispatched += disagg::solve_pd(m, p, &q).feasible;
  }
  o.detail << " " << name << ": " << bad << " of " << inside << " inside infeasible, " << dispatched
           << "/" << samples << " disk samples dispatched;";
  o.require(bad == 0, name + " grid point inside the ellipse is infeasible");
  o.require(dispatched == samples, name + " disk sample not dispatchable");
}

void arpa_containment(Outcome& o) {
  std::mt19937_64 rng(42);
  check_ellipses(o, "square toy T=1", toy::box_model(1, 1.0, 1.0), 1.2, 1000, rng);
  check_ellipses(o, "toy8 T=2", toy8(2), 0.6, 1000, rng);
  check_ellipses(o, "2bus T=2", two_bus(2), 0.6, 1000, rng);
}

void sub_problem_exactness(Outcome& o) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int T = 1; T <= 10; ++T) {
    const auto m = toy8(T);
    std::vector<double> lo(T), hi(T);
    for (int t = 0; t < T; ++t) {
      lo[t] = m.g[t] - 0.15 * u(rng);
      hi[t] = m.g[t] + 0.15 * u(rng);
    }
    const auto sub = aro::solve_sub_apa(m, lo, hi);
    const double brute = oracle::brute_force_apa_sub(m, lo, hi);
    worst = std::max(worst, std::abs(sub.violation - brute) / std::max(1.0, brute));
    o.require(std::abs(sub.violation - brute) <= 1e-6 * std::max(1.0, brute),
              "APA sub-problem differs at T=" + std::to_string(T));
  }
  o.detail << " APA T=1..10 worst rel. diff " << worst << ";";

  const auto u2 = aro::u2_extreme_points(2);
  worst = 0.0;
  for (const auto& [name, build] :
       {std::pair<std::string, std::function<compact::CompactModel(int)>>{"toy8", toy8},
        {"2bus", two_bus}}) {
    for (int T : {1, 2}) {
      const auto m = build(T);
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<aro::EllipsePeriod> periods(T);
        std::vector<Ellipse> shapes(T);
        for (int t = 0; t < T; ++t) {
          auto& e = periods[t];
          e.a1 = 0.1 * u(rng);
          e.a2 = 0.1 * u(rng);
          e.theta = kPi * u(rng);
          const Eigen::Vector2d r1(std::cos(e.theta), std::sin(e.theta));
          const Eigen::Vector2d r2(-r1[1], r1[0]);
          e.shape.pc = m.g[t] - 0.05 * u(rng);
          e.shape.qc = m.h[t] + 0.05 * (u(rng) - 0.5);
          e.shape.Y = e.a1 * r1 * r1.transpose() + e.a2 * r2 * r2.transpose();
          shapes[t] = e.shape;
        }
        const auto sub = aro::solve_sub_arpa(m, u2, periods);
        const double brute = oracle::brute_force_arpa_sub(m, u2.points, shapes);
        worst = std::max(worst, std::abs(sub.violation - brute) / std::max(1.0, brute));
        o.require(std::abs(sub.violation - brute) <= 1e-6 * std::max(1.0, brute),
                  "ARPA sub-problem differs on " + name + " T=" + std::to_string(T));
      }
    }
  }
  o.detail << " ARPA 8^T (T<=2) worst rel. diff " << worst << ";";
}

void power_flow_fidelity(Outcome& o) {
  const pf::NetworkModel net = io::read_feeder(kData + "/feeder_2bus.json");
  const pf::Grid grid(net);
  const der::Fleet fleet = io::read_fleet(kData + "/fleet_2bus.json");
  const VariableLayout layout = der::make_layout(fleet, 1);
  const Eigen::VectorXd x_op = compact::midpoint_operating_point(fleet, layout, 0);
  const auto mdl = pf::linearize(grid, layout, x_op, 0);

  // Independent oracle: Gauss-Seidel on the single load bus, v1 = v0 - z conj(s / v1).
  const std::complex<double> z(0.01, 0.01);
  const std::complex<double> load(0.1, 0.05);
  auto net_load = [&](const Eigen::VectorXd& x) {
    std::complex<double> s = load;
    for (int k = 0; k < layout.nx(); ++k) {
      s -= std::complex<double>(layout.vars[k].p_inj, layout.vars[k].q_inj) * x[k];
    }
    return s;
  };
  auto gauss_seidel = [&](std::complex<double> s) {
    std::complex<double> v = 1.0;
    for (int it = 0; it < 100000; ++it) {
      const auto next = 1.0 - z * std::conj(s / v);
      if (std::abs(next - v) < 1e-15) return next;
      v = next;
    }
    return v;
  };

  const double at_op = std::abs(pf::evaluate_linear(mdl, x_op, 0).v[0] -
                                std::abs(gauss_seidel(net_load(x_op))));
  o.detail << " error at the linearization point " << at_op << ";";
  o.require(at_op <= 1e-10, "linear model not exact at the linearization point");

  // Ball of radius 20% of |s_op| around the net bus-1 injection, moved through
  // the PV (p, q) pair.
  const int p = layout.find(0, 0, VarRole::P), q = layout.find(0, 0, VarRole::Q);
  const double radius = 0.2 * std::abs(net_load(x_op));
  double worst = 0.0;
  for (int a = -10; a <= 10; ++a) {
    for (int b = -10; b <= 10; ++b) {
      const double dp = 0.1 * a * radius, dq = 0.1 * b * radius;
      if (std::hypot(dp, dq) > radius + 1e-15) continue;
      Eigen::VectorXd x = x_op;
      x[p] += dp;
      x[q] += dq;
      const double vl = pf::evaluate_linear(mdl, x, 0).v[0];
      const double vn = std::abs(gauss_seidel(net_load(x)));
      worst = std::max(worst, std::abs(vl - vn) / vn);
    }
  }
  o.detail << " worst relative voltage error over the 20% ball " << worst;
  o.require(worst <= 0.01, "voltage error above 1%");
}

void solver_correctness(Outcome& o) {
  std::mt19937_64 rng(2024);
  int lp_ok = 0;
  for (int k = 0; k < 100; ++k) {
    const auto inst = oracle::random_lp(rng, 10, 6);
    const auto s = lp::solve_lp(inst.lp);
    const auto ref = oracle::vertex_enumeration_min(inst.halfspaces, inst.cost);
    lp_ok += ref && s.status == lp::Status::Optimal &&
             std::abs(s.objective - *ref) <= 1e-7 * std::max(1.0, std::abs(*ref));
  }
  int milp_ok = 0;
  for (int k = 0; k < 50; ++k) {
    const auto inst = oracle::random_knapsack(rng, 12, 2);
    const auto s = lp::solve_milp(inst.milp);
    milp_ok += s.status == lp::Status::Optimal &&
               std::abs(-s.objective - oracle::knapsack_exhaustive(inst)) <= 1e-9;
  }
  o.detail << " LP " << lp_ok << "/100, MILP " << milp_ok << "/50";
  o.require(lp_ok == 100, "LP mismatch");
  o.require(milp_ok == 50, "MILP mismatch");
}

void determinism(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "flexagg_acceptance";
  std::vector<std::string> files{"intervals.csv", "report.json", "ellipses.csv",
                                 "ellipses_points.csv", "dispatch.csv", "grid.csv"};
  for (int threads : {1, 3}) {
    const std::string out = (root / ("run" + std::to_string(threads))).string();
    fs::remove_all(out);
    run::RunConfig cfg;
    cfg.feeder = kData + "/feeder_toy8.json";
    cfg.ders = kData + "/fleet_toy8.json";
    cfg.horizon = 3;
    cfg.out = out;
    cfg.threads = threads;
    cfg.log_level = run::LogLevel::Error;
    cfg.mode = run::Mode::Apa;
    run::run(cfg);
    cfg.mode = run::Mode::Verify;
    cfg.intervals = out + "/intervals.csv";
    run::run(cfg);
    cfg.mode = run::Mode::Arpa;
    cfg.horizon = 2;
    run::run(cfg);
    cfg.mode = run::Mode::Scan;
    cfg.ellipses = out + "/ellipses.csv";
    cfg.res = 0.05;
    run::run(cfg);
    const auto iv = io::read_csv(out + "/intervals.csv", {"t", "p_lo_MW", "p_hi_MW"});
    std::vector<std::vector<double>> reg;
    for (const auto& r : iv) reg.push_back({r[0], 0.5 * (r[1] + r[2])});
    io::write_csv(out + "/preg.csv", {"t", "p_MW"}, reg);
    cfg.mode = run::Mode::Pd;
    cfg.p_reg = out + "/preg.csv";
    cfg.cost = kData + "/cost_toy8.json";
    run::run(cfg);
  }
  int same = 0;
  for (const auto& f : files) {
    const bool eq = io::read_file((root / "run1" / f).string()) ==
                    io::read_file((root / "run3" / f).string());
    same += eq;
    o.require(eq, f + " differs");
  }
  o.detail << " " << same << "/" << files.size() << " files identical across runs (1 vs 3 threads)";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, void (*)(Outcome&)>> criteria = {
      {"1 ccg width equals deterministic equivalent", ccg_matches_deterministic_equivalent},
      {"2 monte carlo disaggregation soundness", monte_carlo_soundness},
      {"3 interval vertices are dispatchable", vertex_soundness},
      {"4 APA dominates the Method 1 baseline", baseline_dominance},
      {"5 ellipses lie inside the feasible P-Q region", arpa_containment},
      {"6 sub-problem MILP equals exhaustive search", sub_problem_exactness},
      {"7 linear power flow fidelity", power_flow_fidelity},
      {"8 LP and MILP solver correctness", solver_correctness},
      {"9 byte-identical outputs", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s  %s (%.2fs):%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
