#include "aro_common.hpp"

#include <cmath>
#include <sstream>

#include "flexagg/error.hpp"

namespace flexagg::aro {
namespace detail {

bool zero_row(const Eigen::MatrixXd& M, int t) {
  return M.cols() == 0 || M.row(t).cwiseAbs().maxCoeff() < 1e-14;
}

DualBlock add_dual_block(lp::LpProblem& lp, const compact::CompactModel& model,
                         const Tracking& track, const std::vector<double>& m) {
  const int n = model.dim();
  const int T = model.horizon;
  DualBlock blk;
  blk.mu_first = lp.num_cols();
  for (const auto& r : model.rows) lp.add_variable(r.rhs, 0.0, 1.0);

  std::vector<std::vector<int>> ci(n);
  std::vector<std::vector<double>> cv(n);
  for (int i = 0; i < model.num_rows(); ++i) {
    const auto& r = model.rows[i];
    for (std::size_t e = 0; e < r.idx.size(); ++e) {
      ci[r.idx[e]].push_back(blk.mu_first + i);
      cv[r.idx[e]].push_back(r.val[e]);
    }
  }
  blk.mult.assign(track.size() * T, -1);
  for (std::size_t k = 0; k < track.size(); ++k) {
    const Eigen::MatrixXd& M = *track[k];
    for (int t = 0; t < T; ++t) {
      if (zero_row(M, t)) continue;
      const double b = m[k * T + t];
      const int col = lp.add_variable(0.0, -b, b);
      blk.mult[k * T + t] = col;
      for (int j = 0; j < n; ++j) {
        if (M(t, j) != 0.0) {
          ci[j].push_back(col);
          cv[j].push_back(-M(t, j));
        }
      }
    }
  }
  for (int j = 0; j < n; ++j) lp.add_eq(ci[j], cv[j], 0.0);
  return blk;
}

std::vector<double> base_big_m(const compact::CompactModel& model, const Tracking& track,
                               const std::vector<const Eigen::VectorXd*>& offsets,
                               const AroOptions& opt) {
  const int T = model.horizon;
  const std::size_t nm = track.size() * T;
  if (opt.big_m > 0.0) return std::vector<double>(nm, opt.big_m);

  lp::LpProblem lp;
  const DualBlock blk =
      add_dual_block(lp, model, track, std::vector<double>(nm, lp::kInf));
  for (int i = 0; i < model.num_rows(); ++i) lp.cost()[blk.mu_first + i] = 0.0;

  double scale = 1.0;
  for (const auto& r : model.rows) scale = std::max(scale, std::abs(r.rhs));
  for (const auto* o : offsets) {
    if (o->size()) scale = std::max(scale, o->cwiseAbs().maxCoeff());
  }
  const double fallback = 10.0 * scale * std::sqrt(std::max(1, model.num_rows()));

  std::vector<double> out(nm, 0.0);
  lp::Basis warm;
  for (std::size_t k = 0; k < nm; ++k) {
    const int col = blk.mult[k];
    if (col < 0) continue;
    double b = 0.0;
    for (double sign : {1.0, -1.0}) {
      lp.cost()[col] = sign;
      const lp::Solution s = solve_lp(lp, opt.lp, warm.cols.empty() ? nullptr : &warm);
      if (s.status != lp::Status::Optimal) {
        b = lp::kInf;
        break;
      }
      warm = s.basis;
      b = std::max(b, std::abs(s.primal[col]));
    }
    lp.cost()[col] = 0.0;
    out[k] = std::isfinite(b) ? 1.25 * b + 1e-6 : fallback;
  }
  return out;
}

std::string format_vector(const std::vector<int>& v) {
  std::ostringstream s;
  s << '(';
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  s << ')';
  return s.str();
}

}  // namespace detail

namespace detail {

double slack_tracking(const compact::CompactModel& model, const Tracking& track,
                      const std::vector<const Eigen::VectorXd*>& offsets,
                      const std::vector<const std::vector<double>*>& targets,
                      const lp::LpOptions& opt) {
  const int n = model.dim();
  const int T = model.horizon;
  for (const auto* p : targets) {
    if (static_cast<int>(p->size()) != T) {
      throw Error(ErrorCode::DimensionMismatch, "slack LP: trajectory length differs from T");
    }
  }
  lp::LpProblem lp;
  for (int j = 0; j < n; ++j) lp.add_variable(0.0, -lp::kInf, lp::kInf);
  for (int i = 0; i < model.num_rows(); ++i) {
    const auto& r = model.rows[i];
    const int s = lp.add_variable(1.0, 0.0, lp::kInf);
    std::vector<int> idx(r.idx);
    std::vector<double> val(r.val);
    idx.push_back(s);
    val.push_back(-1.0);
    lp.add_le(idx, val, r.rhs);
  }
  for (std::size_t k = 0; k < track.size(); ++k) {
    const Eigen::MatrixXd& M = *track[k];
    for (int t = 0; t < T; ++t) {
      const double rhs = (*targets[k])[t] - (*offsets[k])[t];
      if (zero_row(M, t)) {
        if (std::abs(rhs) > 1e-9) return lp::kInf;
        continue;
      }
      std::vector<int> idx;
      std::vector<double> val;
      for (int j = 0; j < n; ++j) {
        if (M(t, j) != 0.0) {
          idx.push_back(j);
          val.push_back(M(t, j));
        }
      }
      lp.add_eq(idx, val, rhs);
    }
  }
  const lp::Solution s = lp::solve_lp(lp, opt);
  if (s.status == lp::Status::Infeasible) return lp::kInf;
  if (s.status != lp::Status::Optimal) {
    throw Error(ErrorCode::NumericalFailure,
                std::string("slack LP ended with status ") + lp::to_string(s.status));
  }
  return s.objective;
}

}  // namespace detail

double slack_value(const compact::CompactModel& model, const std::vector<double>& p,
                   const std::vector<double>* q, const lp::LpOptions& opt) {
  if (q) return detail::slack_tracking(model, {&model.D, &model.F}, {&model.g, &model.h}, {&p, q}, opt);
  return detail::slack_tracking(model, {&model.D}, {&model.g}, {&p}, opt);
}

}  // namespace flexagg::aro
