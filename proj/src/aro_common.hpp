#pragma once
// Pieces shared by the APA and ARPA sub-problems: the dual of the slack LP
//
//   min 1's  s.t.  W x - s <= w,  s >= 0,  M_m x = r_m  (m = tracking blocks)
//
// is  max sum_m lambda_m' r_m - w'mu  s.t.  W'mu = sum_m M_m' lambda_m, 0 <= mu <= 1.

#include <Eigen/Dense>
#include <vector>

#include "flexagg/aro.hpp"

namespace flexagg::aro::detail {

/// Tracking matrices (each T x dim), e.g. {&D} or {&D, &F}.
using Tracking = std::vector<const Eigen::MatrixXd*>;

struct DualBlock {
  int mu_first = 0;
  /// Column of multiplier (m, t) at m * T + t, -1 for an all-zero tracking
  /// row (its multiplier never enters the objective and is left out).
  std::vector<int> mult;
};

/// Adds mu in [0, 1] with cost w (minimization form), the multipliers with
/// bounds [-m, m] (free when m is infinite) and zero cost, and the rows
/// W'mu - sum M'lambda = 0.
DualBlock add_dual_block(lp::LpProblem& lp, const compact::CompactModel& model,
                         const Tracking& track, const std::vector<double>& m);

bool zero_row(const Eigen::MatrixXd& M, int t);

/// Per-multiplier big-M: a user value, or 1.25 times the largest |lambda|
/// over the dual polytope (2 LPs per multiplier). Falls back to
/// 10 max(|w|, |r|, 1) sqrt(rows) when a bound LP is unbounded.
std::vector<double> base_big_m(const compact::CompactModel& model, const Tracking& track,
                               const std::vector<const Eigen::VectorXd*>& offsets,
                               const AroOptions& opt);

/// Least total row violation with M_k x + off_k = target_k for every k.
double slack_tracking(const compact::CompactModel& model, const Tracking& track,
                      const std::vector<const Eigen::VectorXd*>& offsets,
                      const std::vector<const std::vector<double>*>& targets,
                      const lp::LpOptions& opt);

std::string format_vector(const std::vector<int>& v);

}  // namespace flexagg::aro::detail
