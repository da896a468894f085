#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexagg/compact.hpp"
#include "flexagg/ellipse.hpp"
#include "flexagg/lp.hpp"

namespace flexagg::disagg {

struct DeviceCost {
  double c_es = 0.0;   // per MW^2, on the phase-summed ES power
  double c_hv = 0.0;   // per degC^2 of comfort deviation
  double c1_pv = 0.0;  // per MW of PV output
  double c2_pv = 0.0;  // per MW^2 of curtailment
};

struct CostParams {
  Series price{0.0};  // per MWh of substation import
  std::map<std::string, DeviceCost> devices;
};

/// Cost file: {"price": number | [..], "devices": {"<id>": {"c_es", "c_hv",
/// "c1_pv", "c2_pv"}}}. Unknown fields raise ParseError.
CostParams read_cost(const std::string& path);

struct PdOptions {
  lp::LpOptions lp;
  /// Secant segments per quadratic term.
  int segments = 16;
  /// Run the deletion filter on infeasible instances.
  bool explain = false;
};

struct DispatchSchedule {
  bool feasible = false;
  lp::Status status = lp::Status::Infeasible;
  std::vector<double> x;
  std::vector<double> p0, q0;
  /// Per ES / HVAC device (fleet order), empty for other kinds.
  std::vector<std::vector<double>> soc, temperature;
  /// Objective with each square replaced by its secant interpolant, and
  /// recomputed exactly at x. Zero in feasibility mode.
  double objective_pwl = 0.0;
  double objective_exact = 0.0;
  /// Provenance of an irreducible infeasible row set (explain mode). Rows
  /// tagged "tracking.p"/"tracking.q" are the regulation equalities.
  std::vector<der::Provenance> conflict;
};

/// Dispatch x with D x + g = p_reg (and F x + h = q_reg when given), W x <= w.
/// Without a cost the objective is zero.
DispatchSchedule solve_pd(const compact::CompactModel& model, const std::vector<double>& p_reg,
                          const std::vector<double>* q_reg = nullptr,
                          const CostParams* cost = nullptr, const PdOptions& opt = {});

/// Portable uniform double in [0, 1) from 53 random bits.
double unit_uniform(std::uint64_t bits);

struct McReport {
  int n = 0;
  int feasible_count = 0;
  std::vector<std::vector<double>> failures;
  double feasible_rate() const { return n ? static_cast<double>(feasible_count) / n : 1.0; }
};

/// N trajectories p_t ~ Unif(lo_t, hi_t) from mt19937_64(seed), each checked
/// with solve_pd in feasibility mode.
McReport monte_carlo_verify(const compact::CompactModel& model, const std::vector<double>& lo,
                            const std::vector<double>& hi, int n, std::uint64_t seed,
                            int threads = 1, const lp::LpOptions& lp = {});

struct GridPoint {
  double p = 0.0, q = 0.0;
  bool feasible = false;
  bool inside = false;  // inside the supplied ellipse
};

struct GridScan {
  std::vector<GridPoint> points;
  int inside = 0;
  int inside_infeasible = 0;
};

/// P-Q scan of one period: every grid point (p_lo + i res, q_lo + j res)
/// within the ranges is checked with solve_pd tracking both p and q. For
/// T > 1 the other periods track `fixed` (one (p, q) per period; the entry
/// of the scanned period is ignored).
GridScan pq_grid_scan(const compact::CompactModel& model, double p_lo, double p_hi, double q_lo,
                      double q_hi, double res, const std::optional<Ellipse>& ellipse = {},
                      int threads = 1, const lp::LpOptions& lp = {}, int period = 0,
                      const std::vector<Eigen::Vector2d>& fixed = {});

}  // namespace flexagg::disagg
