#pragma once
// Exhaustive references for the aggregation solvers. They only use the
// compact model and the LP engine, never the CCG or MILP code paths.

#include <cmath>
#include <vector>

#include "flexagg/compact.hpp"
#include "flexagg/ellipse.hpp"
#include "flexagg/lp.hpp"

namespace oracle {

namespace detail {

inline void add_tracking(flexagg::lp::LpProblem& lp, const Eigen::MatrixXd& M, int t, int off,
                         std::vector<int> idx, std::vector<double> val, double rhs) {
  for (int j = 0; j < M.cols(); ++j) {
    if (M(t, j) != 0.0) {
      idx.push_back(off + j);
      val.push_back(M(t, j));
    }
  }
  if (idx.empty()) {
    // 0 = rhs: encode on a fixed dummy column so the LP stays well-formed.
    const int z = lp.add_variable(0.0, 0.0, 0.0);
    idx.push_back(z);
    val.push_back(1.0);
  }
  lp.add_eq(idx, val, rhs);
}

}  // namespace detail

/// min sum(sigma) s.t. W x <= w + sigma, sigma >= 0, D x + g = p and, when
/// q is given, F x + h = q. Infinity when the equalities cannot hold.
inline double slack_lp(const flexagg::compact::CompactModel& m, const std::vector<double>& p,
                       const std::vector<double>* q = nullptr) {
  namespace lp = flexagg::lp;
  lp::LpProblem prob;
  const int n = m.dim();
  for (int j = 0; j < n; ++j) prob.add_variable(0.0, -lp::kInf, lp::kInf);
  for (const auto& r : m.rows) {
    const int s = prob.add_variable(1.0, 0.0, lp::kInf);
    std::vector<int> idx(r.idx);
    std::vector<double> val(r.val);
    idx.push_back(s);
    val.push_back(-1.0);
    prob.add_le(idx, val, r.rhs);
  }
  for (int t = 0; t < m.horizon; ++t) {
    detail::add_tracking(prob, m.D, t, 0, {}, {}, p[t] - m.g[t]);
    if (q) detail::add_tracking(prob, m.F, t, 0, {}, {}, (*q)[t] - m.h[t]);
  }
  const auto sol = lp::solve_lp(prob);
  if (sol.status == lp::Status::Infeasible) return lp::kInf;
  return sol.status == lp::Status::Optimal ? sol.objective : std::nan("");
}

/// Worst vertex of [lo, hi] by enumerating all 2^T slack LPs.
inline double brute_force_apa_sub(const flexagg::compact::CompactModel& m,
                                  const std::vector<double>& lo, const std::vector<double>& hi) {
  const int T = m.horizon;
  double best = 0.0;
  for (long mask = 0; mask < (1L << T); ++mask) {
    std::vector<double> p(T);
    for (int t = 0; t < T; ++t) p[t] = (mask >> t) & 1 ? hi[t] : lo[t];
    best = std::max(best, slack_lp(m, p));
  }
  return best;
}

/// Worst assignment of one point per period, all points^T slack LPs. Point
/// e in period t maps to the ellipse image c_t + Y_t e.
inline double brute_force_arpa_sub(const flexagg::compact::CompactModel& m,
                                   const std::vector<Eigen::Vector2d>& points,
                                   const std::vector<flexagg::Ellipse>& ellipses) {
  const int T = m.horizon;
  const long n = static_cast<long>(points.size());
  long total = 1;
  for (int t = 0; t < T; ++t) total *= n;
  double best = 0.0;
  for (long code = 0; code < total; ++code) {
    std::vector<double> p(T), q(T);
    long c = code;
    for (int t = 0; t < T; ++t) {
      const Eigen::Vector2d at = ellipses[t].point(points[c % n]);
      c /= n;
      p[t] = at[0];
      q[t] = at[1];
    }
    best = std::max(best, slack_lp(m, p, &q));
  }
  return best;
}

/// Deterministic equivalent of the interval model: one recourse copy per
/// vertex of the box, all in one LP. Returns the optimal total width.
inline double deterministic_equivalent_width(const flexagg::compact::CompactModel& m) {
  namespace lp = flexagg::lp;
  const int T = m.horizon;
  const int n = m.dim();
  lp::LpProblem prob;
  std::vector<int> lo(T), hi(T);
  for (int t = 0; t < T; ++t) {
    lo[t] = prob.add_variable(1.0, -lp::kInf, lp::kInf);
    hi[t] = prob.add_variable(-1.0, -lp::kInf, lp::kInf);
  }
  for (long mask = 0; mask < (1L << T); ++mask) {
    const int off = prob.num_cols();
    for (int j = 0; j < n; ++j) prob.add_variable(0.0, -lp::kInf, lp::kInf);
    for (int t = 0; t < T; ++t) {
      detail::add_tracking(prob, m.D, t, off, {(mask >> t) & 1 ? hi[t] : lo[t]}, {-1.0}, -m.g[t]);
    }
    for (const auto& r : m.rows) {
      std::vector<int> idx(r.idx);
      for (int& i : idx) i += off;
      prob.add_le(idx, r.val, r.rhs);
    }
  }
  const auto sol = lp::solve_lp(prob);
  return sol.status == lp::Status::Optimal ? -sol.objective : std::nan("");
}

}  // namespace oracle
