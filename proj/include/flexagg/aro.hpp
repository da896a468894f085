#pragma once

#include <string>
#include <vector>

#include "flexagg/compact.hpp"
#include "flexagg/ellipse.hpp"
#include "flexagg/lp.hpp"

namespace flexagg::aro {

/// Options shared by the APA and ARPA column-and-constraint generation.
struct AroOptions {
  /// Convergence tolerance on the sub-problem violation (MW, scaled rows).
  double eps = 1e-6;
  /// Big-M for the linearized multiplier products. 0 derives per-period
  /// bounds from LPs over the dual polytope.
  double big_m = 0.0;
  int big_m_retries = 3;
  /// 0 selects 2^T for APA and 8^T for ARPA (capped at 4096).
  int max_rounds = 0;
  /// Method 1: add the ES / HVAC ordering rows between the xi = 1 and
  /// xi = 0 recourse copies.
  bool heuristic = false;
  /// Aggregate q0 instead of p0 (APA only).
  bool reactive = false;
  lp::LpOptions lp;
  lp::MilpOptions milp;
};

// ---------------------------------------------------------------- APA

struct Scenario {
  std::vector<int> xi;  // 0/1 per period
  std::string origin;   // "init" or "round <k>"
};

struct RoundLog {
  int round = 0;
  double f_master = 0.0;
  double f_sub = 0.0;
  std::vector<int> xi;
  double big_m = 0.0;  // largest multiplier bound used by the sub-problem
};

struct FeasibleIntervals {
  std::vector<double> lo, hi;  // MW (MVar in reactive mode)
  double objective = 0.0;      // sum of widths
  std::vector<Scenario> pool;
  std::vector<RoundLog> log;
};

struct ApaMaster {
  std::vector<double> lo, hi;
  double objective = 0.0;
  std::vector<std::vector<double>> recourse;  // one x per pooled scenario
};

/// Maximizes sum(hi - lo) subject to one dispatchable recourse copy per
/// pooled vertex. Throws Infeasible when no operation is feasible.
ApaMaster solve_master_apa(const compact::CompactModel& model, const std::vector<Scenario>& pool,
                           const AroOptions& opt = {});

struct ApaSub {
  double violation = 0.0;
  std::vector<int> xi;
  std::vector<double> bounds;  // multiplier bound per period
};

/// Worst vertex of the box [lo, hi]: max over xi of the least total row
/// violation needed to dispatch it, solved as one MILP over the dual of the
/// inner LP. Throws BigMTooSmall after the retries are exhausted.
ApaSub solve_sub_apa(const compact::CompactModel& model, const std::vector<double>& lo,
                     const std::vector<double>& hi, const AroOptions& opt = {});

/// Column-and-constraint generation from the pool {1, 0}. Throws MaxRounds
/// or BigMTooSmall (repeated scenario) with the pool in the message.
FeasibleIntervals solve_apa(const compact::CompactModel& model, const AroOptions& opt = {});

/// sum_t (hi_t - lo_t) dt.
double aggregate_flexibility(const std::vector<double>& lo, const std::vector<double>& hi,
                             double dt);

// --------------------------------------------------------------- ARPA

/// Extreme points of the circumscribed polygon with 4 n_squares sides,
/// counterclockwise starting just above angle 0.
struct PolyhedralU2 {
  std::vector<der::Halfspace> halfspaces;
  std::vector<Eigen::Vector2d> points;
};

PolyhedralU2 u2_extreme_points(int n_squares);

struct PqScenario {
  std::vector<int> point;  // extreme-point index per period
  std::string origin;
};

struct ArpaOptions {
  AroOptions aro;
  int n_squares = 2;
  /// Candidate rotation angles (radians) shared by every period; the best
  /// objective is kept. {0} is the axis-aligned mode.
  std::vector<double> thetas{0.0};
  /// Stop refining log cuts when every cut gap is below this.
  double cut_tol = 1e-6;
  int threads = 1;
};

struct EllipsePeriod {
  Ellipse shape;
  double a1 = 0.0, a2 = 0.0;  // semi-axes along the rotated frame
  double theta = 0.0;
  bool degenerate = false;    // a1 or a2 below 1e-9
};

struct ArpaRound {
  int round = 0;
  double f_master = 0.0;
  double f_sub = 0.0;
  std::vector<int> point;
};

struct EllipseSchedule {
  std::vector<EllipsePeriod> periods;
  double objective = 0.0;  // sum of log a1 + log a2
  double theta = 0.0;
  std::vector<PqScenario> pool;
  std::vector<ArpaRound> log;
};

struct ArpaMaster {
  std::vector<EllipsePeriod> periods;
  double objective = 0.0;  // exact sum of logs at the returned axes
  double cut_objective = 0.0;
  int cuts = 0;
};

ArpaMaster solve_master_arpa(const compact::CompactModel& model, const PolyhedralU2& u2,
                             const std::vector<PqScenario>& pool, double theta,
                             const ArpaOptions& opt = {});

struct ArpaSub {
  double violation = 0.0;
  std::vector<int> point;
};

ArpaSub solve_sub_arpa(const compact::CompactModel& model, const PolyhedralU2& u2,
                       const std::vector<EllipsePeriod>& periods, const ArpaOptions& opt = {});

EllipseSchedule solve_arpa(const compact::CompactModel& model, const ArpaOptions& opt = {});

// ------------------------------------------------------------- shared

/// Least total violation sum(sigma) with W x <= w + sigma, sigma >= 0 and
/// the tracking equalities D x + g = p (and F x + h = q when q is given).
/// Returns +inf when the equalities alone are inconsistent.
double slack_value(const compact::CompactModel& model, const std::vector<double>& p,
                   const std::vector<double>* q = nullptr, const lp::LpOptions& opt = {});

}  // namespace flexagg::aro
