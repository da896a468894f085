#include "flexagg/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexagg/error.hpp"

namespace flexagg::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::IterLimit: return "IterLimit";
    case Status::NodeLimit: return "NodeLimit";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

int LpProblem::add_variable(double cost, double lo, double hi, std::string name) {
  cost_.push_back(cost);
  col_lo_.push_back(lo);
  col_hi_.push_back(hi);
  col_names_.push_back(std::move(name));
  return num_cols() - 1;
}

int LpProblem::add_row(std::span<const int> index, std::span<const double> value, double lo,
                       double hi, std::string name) {
  if (index.size() != value.size()) {
    throw Error(ErrorCode::DimensionMismatch, "row index/value length differ");
  }
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (value[k] == 0.0) continue;
    entry_col_.push_back(index[k]);
    entry_val_.push_back(value[k]);
  }
  row_start_.push_back(static_cast<int>(entry_col_.size()));
  row_lo_.push_back(lo);
  row_hi_.push_back(hi);
  row_names_.push_back(std::move(name));
  return num_rows() - 1;
}

std::vector<double> LpProblem::activity(std::span<const double> y) const {
  std::vector<double> a(num_rows(), 0.0);
  for (int i = 0; i < num_rows(); ++i) {
    double s = 0.0;
    for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) s += entry_val_[k] * y[entry_col_[k]];
    a[i] = s;
  }
  return a;
}

double LpProblem::max_violation(std::span<const double> y) const {
  double worst = 0.0;
  for (int j = 0; j < num_cols(); ++j) {
    worst = std::max({worst, col_lo_[j] - y[j], y[j] - col_hi_[j]});
  }
  const auto a = activity(y);
  for (int i = 0; i < num_rows(); ++i) {
    worst = std::max({worst, row_lo_[i] - a[i], a[i] - row_hi_[i]});
  }
  return worst;
}

void LpProblem::validate() const {
  const int n = num_cols();
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(cost_[j]) || col_lo_[j] > col_hi_[j] || std::isnan(col_lo_[j]) ||
        std::isnan(col_hi_[j])) {
      throw Error(ErrorCode::DimensionMismatch, "bad column " + std::to_string(j));
    }
  }
  for (int i = 0; i < num_rows(); ++i) {
    if (row_lo_[i] > row_hi_[i] || std::isnan(row_lo_[i]) || std::isnan(row_hi_[i])) {
      throw Error(ErrorCode::DimensionMismatch, "bad row bounds " + std::to_string(i));
    }
  }
  for (std::size_t k = 0; k < entry_col_.size(); ++k) {
    if (entry_col_[k] < 0 || entry_col_[k] >= n || !std::isfinite(entry_val_[k])) {
      throw Error(ErrorCode::DimensionMismatch, "bad matrix entry");
    }
  }
}

// ---------------------------------------------------------------------------

struct SimplexSolver::Data {
  int n = 0;
  int m = 0;
  // Column-wise copy of G.
  std::vector<int> cstart;
  std::vector<int> rind;
  std::vector<double> cval;
  std::vector<double> cost, col_lo, col_hi, row_lo, row_hi;
};

namespace {

using Data = SimplexSolver::Data;

struct Eta {
  int pos = 0;
  double pivot = 1.0;
  std::vector<int> idx;
  std::vector<double> val;
};

// One simplex run. Variables 0..n-1 are structural, n+i is the logical of row
// i with column -e_i, so that G y - r = 0 and row bounds become bounds on r.
class Engine {
 public:
  Engine(const Data& d, std::span<const double> col_lo, std::span<const double> col_hi,
         const LpOptions& opt)
      : d_(d), n_(d.n), m_(d.m), total_(d.n + d.m), opt_(opt) {
    lo_.resize(total_);
    hi_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = col_lo[j];
      hi_[j] = col_hi[j];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = d.row_lo[i];
      hi_[n_ + i] = d.row_hi[i];
    }
    x_.assign(total_, 0.0);
    st_.assign(total_, VarStatus::AtLower);
    pos_.assign(total_, -1);
    head_.assign(m_, -1);
    work_.assign(m_, 0.0);
    alpha_.assign(m_, 0.0);
    cb_.assign(m_, 0.0);
    pi_.assign(m_, 0.0);
    in_r1_.assign(m_, -1);
    max_iter_ = opt.max_iterations > 0 ? opt.max_iterations : 50L * (m_ + n_) + 100;
  }

  Solution run(const Basis* warm) {
    Solution sol;
    for (int j = 0; j < total_; ++j) {
      if (lo_[j] > hi_[j] + opt_.tol.feasibility) {
        sol.status = Status::Infeasible;
        return sol;
      }
    }
    init_basis(warm);
    if (!refactor()) return fail(sol);
    compute_basic_values();

    bool fresh = true;
    int degenerate_streak = 0;
    bool bland = false;
    while (true) {
      if (iter_ >= max_iter_) {
        sol.status = Status::IterLimit;
        return finish(sol);
      }
      const bool phase1 = set_phase_costs();
      btran(cb_, pi_);

      int enter = -1;
      int dir = 0;
      price(phase1, bland, enter, dir);
      if (enter < 0) {
        if (!fresh) {
          if (!refactor()) return fail(sol);
          compute_basic_values();
          fresh = true;
          continue;
        }
        if (perturbed_ == 1) {
          // Expanded bounds only relax the problem, so infeasibility stands;
          // an optimum is cleaned up under the original bounds.
          restore_bounds();
          if (phase1) {
            sol.status = Status::Infeasible;
            return finish(sol);
          }
          degenerate_streak = 0;
          bland = false;
          continue;
        }
        sol.status = phase1 ? Status::Infeasible : Status::Optimal;
        return finish(sol);
      }

      column(enter, work_);
      ftran(work_, alpha_);

      double theta = kInf;
      int leave_pos = -1;
      bool leave_upper = false;
      ratio_test(dir, bland, theta, leave_pos, leave_upper);

      bool flip = false;
      if (std::isfinite(lo_[enter]) && std::isfinite(hi_[enter]) &&
          hi_[enter] - lo_[enter] <= theta) {
        theta = hi_[enter] - lo_[enter];
        flip = true;
      }
      if (!std::isfinite(theta)) {
        if (!fresh) {
          if (!refactor()) return fail(sol);
          compute_basic_values();
          fresh = true;
          continue;
        }
        if (perturbed_ == 1) {
          restore_bounds();
          continue;
        }
        sol.status = phase1 ? Status::NumericalFailure : Status::Unbounded;
        return finish(sol);
      }

      ++iter_;
      fresh = false;
      if (theta <= 1e-12) {
        if (++degenerate_streak >= opt_.bland_after) {
          // First stall: perturb the bounds once. Later stalls: Bland's rule.
          if (perturbed_ == 0) {
            perturb_bounds();
            degenerate_streak = 0;
          } else {
            bland = true;
          }
        }
      } else {
        degenerate_streak = 0;
        bland = false;
      }

      x_[enter] += dir * theta;
      if (theta != 0.0) {
        for (int p = 0; p < m_; ++p) {
          if (alpha_[p] != 0.0) x_[head_[p]] -= dir * theta * alpha_[p];
        }
      }
      if (flip) {
        st_[enter] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
        x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
        continue;
      }

      const int leave = head_[leave_pos];
      x_[leave] = leave_upper ? hi_[leave] : lo_[leave];
      st_[leave] = leave_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      if (lo_[leave] == hi_[leave]) st_[leave] = VarStatus::AtLower;
      pos_[leave] = -1;
      head_[leave_pos] = enter;
      pos_[enter] = leave_pos;
      st_[enter] = VarStatus::Basic;
      push_eta(leave_pos);
      if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
        if (!refactor()) return fail(sol);
        compute_basic_values();
        fresh = true;
      }
    }
  }

 private:
  // --- degeneracy --------------------------------------------------------
  // Widens every non-fixed finite bound by a deterministic pseudo-random
  // amount in [1, 2) * 1e-7 * (1 + |bound|) and moves nonbasic variables along.
  void perturb_bounds() {
    orig_lo_ = lo_;
    orig_hi_ = hi_;
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next = [&state] {
      std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
    };
    for (int j = 0; j < total_; ++j) {
      if (lo_[j] == hi_[j]) continue;
      if (std::isfinite(lo_[j])) lo_[j] -= 1e-7 * (1.0 + std::abs(lo_[j])) * (1.0 + next());
      if (std::isfinite(hi_[j])) hi_[j] += 1e-7 * (1.0 + std::abs(hi_[j])) * (1.0 + next());
      if (st_[j] != VarStatus::Basic) set_nonbasic_value(j);
    }
    compute_basic_values();
    perturbed_ = 1;
  }

  void restore_bounds() {
    lo_ = orig_lo_;
    hi_ = orig_hi_;
    for (int j = 0; j < total_; ++j) {
      if (st_[j] != VarStatus::Basic) set_nonbasic_value(j);
    }
    compute_basic_values();
    perturbed_ = 2;
  }

  // --- basis setup -------------------------------------------------------
  void place_nonbasic(int j) {
    const bool lo_fin = std::isfinite(lo_[j]);
    const bool hi_fin = std::isfinite(hi_[j]);
    if (lo_fin && hi_fin) {
      st_[j] = std::abs(hi_[j]) < std::abs(lo_[j]) ? VarStatus::AtUpper : VarStatus::AtLower;
    } else if (lo_fin) {
      st_[j] = VarStatus::AtLower;
    } else if (hi_fin) {
      st_[j] = VarStatus::AtUpper;
    } else {
      st_[j] = VarStatus::Free;
    }
    set_nonbasic_value(j);
  }

  void set_nonbasic_value(int j) {
    switch (st_[j]) {
      case VarStatus::AtLower: x_[j] = lo_[j]; break;
      case VarStatus::AtUpper: x_[j] = hi_[j]; break;
      default: x_[j] = 0.0; break;
    }
  }

  void init_basis(const Basis* warm) {
    bool use_warm = false;
    if (warm && static_cast<int>(warm->cols.size()) == n_ &&
        static_cast<int>(warm->rows.size()) == m_) {
      int basic = 0;
      for (auto s : warm->cols) basic += s == VarStatus::Basic;
      for (auto s : warm->rows) basic += s == VarStatus::Basic;
      use_warm = basic == m_;
    }
    if (!use_warm) {
      for (int j = 0; j < n_; ++j) place_nonbasic(j);
      for (int i = 0; i < m_; ++i) {
        st_[n_ + i] = VarStatus::Basic;
        head_[i] = n_ + i;
        pos_[n_ + i] = i;
      }
      return;
    }
    int p = 0;
    for (int j = 0; j < total_; ++j) {
      const VarStatus s = j < n_ ? warm->cols[j] : warm->rows[j - n_];
      if (s == VarStatus::Basic) {
        st_[j] = VarStatus::Basic;
        head_[p] = j;
        pos_[j] = p++;
        continue;
      }
      st_[j] = s;
      // Statuses from a different bound set may point at an infinite bound.
      if ((s == VarStatus::AtLower && !std::isfinite(lo_[j])) ||
          (s == VarStatus::AtUpper && !std::isfinite(hi_[j])) ||
          (s == VarStatus::Free && (std::isfinite(lo_[j]) || std::isfinite(hi_[j])))) {
        place_nonbasic(j);
      } else {
        set_nonbasic_value(j);
      }
    }
  }

  // --- factorization -----------------------------------------------------
  bool factor_kernel() {
    kcols_.clear();
    r1rows_.clear();
    std::fill(in_r1_.begin(), in_r1_.end(), -1);
    for (int p = 0; p < m_; ++p) {
      if (head_[p] < n_) kcols_.push_back(head_[p]);
    }
    for (int i = 0; i < m_; ++i) {
      if (st_[n_ + i] != VarStatus::Basic) {
        in_r1_[i] = static_cast<int>(r1rows_.size());
        r1rows_.push_back(i);
      }
    }
    const int k = static_cast<int>(kcols_.size());
    if (k != static_cast<int>(r1rows_.size())) return false;
    kernel_.resize(k, k);
    kernel_.setZero();
    for (int s = 0; s < k; ++s) {
      const int j = kcols_[s];
      for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) {
        const int r = in_r1_[d_.rind[e]];
        if (r >= 0) kernel_(r, s) = d_.cval[e];
      }
    }
    if (k == 0) return true;
    lu_.compute(kernel_);
    const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
    return diag.minCoeff() > 1e-11 * std::max(1.0, diag.maxCoeff());
  }

  // Swap dependent structural columns out of the basis for logicals of the
  // uncovered rows, using a rank-revealing factorization of the kernel.
  void repair_kernel() {
    const int k = static_cast<int>(kcols_.size());
    Eigen::FullPivLU<Eigen::MatrixXd> full(kernel_);
    full.setThreshold(1e-10);
    const int rank = static_cast<int>(full.rank());
    const auto& q = full.permutationQ().indices();
    const auto& pinv = full.permutationP().indices();
    std::vector<char> row_covered(k, 0);
    // permutationP maps original row r to pivot position pinv[r].
    for (int r = 0; r < k; ++r) {
      if (pinv[r] < rank) row_covered[r] = 1;
    }
    std::vector<int> drop_cols;
    for (int s = rank; s < k; ++s) drop_cols.push_back(kcols_[q[s]]);
    std::vector<int> add_rows;
    for (int r = 0; r < k; ++r) {
      if (!row_covered[r]) add_rows.push_back(r1rows_[r]);
    }
    for (std::size_t t = 0; t < drop_cols.size(); ++t) {
      const int j = drop_cols[t];
      const int p = pos_[j];
      pos_[j] = -1;
      place_nonbasic(j);
      const int logical = n_ + add_rows[t];
      head_[p] = logical;
      pos_[logical] = p;
      st_[logical] = VarStatus::Basic;
    }
  }

  bool refactor() {
    etas_.clear();
    if (!factor_kernel()) {
      if (static_cast<int>(kcols_.size()) != static_cast<int>(r1rows_.size())) return false;
      repair_kernel();
      if (!factor_kernel()) return false;
    }
    base_pos_.assign(total_, -1);
    for (int p = 0; p < m_; ++p) base_pos_[head_[p]] = p;
    return true;
  }

  // B z = a for the basis at the last refactorization; z by position.
  void base_ftran(const std::vector<double>& a, std::vector<double>& z) {
    const int k = static_cast<int>(kcols_.size());
    std::fill(acc_.begin(), acc_.end(), 0.0);
    acc_.resize(m_, 0.0);
    if (k > 0) {
      Eigen::VectorXd rhs(k);
      for (int r = 0; r < k; ++r) rhs[r] = a[r1rows_[r]];
      const Eigen::VectorXd zs = lu_.solve(rhs);
      for (int s = 0; s < k; ++s) {
        const int j = kcols_[s];
        z[base_pos_[j]] = zs[s];
        if (zs[s] == 0.0) continue;
        for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) acc_[d_.rind[e]] += d_.cval[e] * zs[s];
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (in_r1_[i] < 0) z[base_pos_[n_ + i]] = acc_[i] - a[i];
    }
  }

  // B' pi = c for the basis at the last refactorization; c by position.
  void base_btran(const std::vector<double>& c, std::vector<double>& pi) {
    for (int i = 0; i < m_; ++i) pi[i] = in_r1_[i] < 0 ? -c[base_pos_[n_ + i]] : 0.0;
    const int k = static_cast<int>(kcols_.size());
    if (k == 0) return;
    Eigen::VectorXd rhs(k);
    for (int s = 0; s < k; ++s) {
      const int j = kcols_[s];
      double v = c[base_pos_[j]];
      for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) {
        const int i = d_.rind[e];
        if (in_r1_[i] < 0) v -= d_.cval[e] * pi[i];
      }
      rhs[s] = v;
    }
    const Eigen::VectorXd sol = lu_.transpose().solve(rhs);
    for (int r = 0; r < k; ++r) pi[r1rows_[r]] = sol[r];
  }

  void ftran(const std::vector<double>& a, std::vector<double>& z) {
    base_ftran(a, z);
    for (const Eta& eta : etas_) {
      const double zp = z[eta.pos] / eta.pivot;
      z[eta.pos] = zp;
      if (zp == 0.0) continue;
      for (std::size_t t = 0; t < eta.idx.size(); ++t) z[eta.idx[t]] -= eta.val[t] * zp;
    }
  }

  void btran(const std::vector<double>& c, std::vector<double>& pi) {
    tmp_ = c;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double v = tmp_[it->pos];
      for (std::size_t t = 0; t < it->idx.size(); ++t) v -= it->val[t] * tmp_[it->idx[t]];
      tmp_[it->pos] = v / it->pivot;
    }
    base_btran(tmp_, pi);
  }

  void push_eta(int pos) {
    Eta eta;
    eta.pos = pos;
    eta.pivot = alpha_[pos];
    for (int p = 0; p < m_; ++p) {
      if (p != pos && alpha_[p] != 0.0) {
        eta.idx.push_back(p);
        eta.val.push_back(alpha_[p]);
      }
    }
    etas_.push_back(std::move(eta));
  }

  // Dense column of variable j in [G, -I].
  void column(int j, std::vector<double>& a) {
    std::fill(a.begin(), a.end(), 0.0);
    if (j < n_) {
      for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) a[d_.rind[e]] = d_.cval[e];
    } else {
      a[j - n_] = -1.0;
    }
  }

  void compute_basic_values() {
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (st_[j] == VarStatus::Basic || x_[j] == 0.0) continue;
      for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) rhs[d_.rind[e]] -= d_.cval[e] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      if (st_[n_ + i] != VarStatus::Basic) rhs[i] += x_[n_ + i];
    }
    std::vector<double> z(m_, 0.0);
    ftran(rhs, z);
    for (int p = 0; p < m_; ++p) x_[head_[p]] = z[p];
  }

  // --- pricing -----------------------------------------------------------
  bool set_phase_costs() {
    const double tol = opt_.tol.feasibility;
    bool infeasible = false;
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (x_[j] < lo_[j] - tol) {
        cb_[p] = -1.0;
        infeasible = true;
      } else if (x_[j] > hi_[j] + tol) {
        cb_[p] = 1.0;
        infeasible = true;
      } else {
        cb_[p] = 0.0;
      }
    }
    if (!infeasible) {
      for (int p = 0; p < m_; ++p) cb_[p] = head_[p] < n_ ? d_.cost[head_[p]] : 0.0;
    }
    phase1_ = infeasible;
    return infeasible;
  }

  double reduced_cost(int j, bool phase1) const {
    if (j >= n_) return pi_[j - n_];
    double dj = phase1 ? 0.0 : d_.cost[j];
    for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) dj -= d_.cval[e] * pi_[d_.rind[e]];
    return dj;
  }

  void price(bool phase1, bool bland, int& enter, int& dir) {
    const double tol = opt_.tol.optimality;
    double best = 0.0;
    for (int j = 0; j < total_; ++j) {
      const VarStatus s = st_[j];
      if (s == VarStatus::Basic || lo_[j] == hi_[j]) continue;
      const double dj = reduced_cost(j, phase1);
      int dj_dir = 0;
      if (dj < -tol && (s == VarStatus::AtLower || s == VarStatus::Free)) dj_dir = 1;
      if (dj > tol && (s == VarStatus::AtUpper || s == VarStatus::Free)) dj_dir = -1;
      if (dj_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = dj_dir;
        return;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        enter = j;
        dir = dj_dir;
      }
    }
  }

  void ratio_test(int dir, bool bland, double& theta, int& leave_pos, bool& leave_upper) {
    const double ftol = opt_.tol.feasibility;
    const double ptol = opt_.tol.pivot;
    theta = kInf;
    candidates_.clear();
    for (int p = 0; p < m_; ++p) {
      const double a = alpha_[p];
      if (std::abs(a) <= ptol) continue;
      const int j = head_[p];
      const double rate = -dir * a;
      const double x = x_[j];
      double t = kInf;
      bool upper = false;
      if (x < lo_[j] - ftol) {
        if (rate > 0) t = (lo_[j] - x) / rate;
      } else if (x > hi_[j] + ftol) {
        if (rate < 0) {
          t = (x - hi_[j]) / -rate;
          upper = true;
        }
      } else if (rate < 0 && std::isfinite(lo_[j])) {
        t = std::max(0.0, x - lo_[j]) / -rate;
      } else if (rate > 0 && std::isfinite(hi_[j])) {
        t = std::max(0.0, hi_[j] - x) / rate;
        upper = true;
      }
      if (!std::isfinite(t)) continue;
      candidates_.push_back({p, t, upper});
      theta = std::min(theta, t);
    }
    if (!std::isfinite(theta)) return;
    const double cut = theta + 1e-12 * std::max(1.0, theta);
    double best_pivot = -1.0;
    int best_var = total_;
    for (const auto& c : candidates_) {
      if (c.t > cut) continue;
      const int j = head_[c.pos];
      const double mag = std::abs(alpha_[c.pos]);
      const bool better = bland ? j < best_var
                                : (mag > best_pivot * (1.0 + 1e-9) ||
                                   (mag >= best_pivot * (1.0 - 1e-9) && j < best_var));
      if (better) {
        best_pivot = mag;
        best_var = j;
        leave_pos = c.pos;
        leave_upper = c.upper;
        theta = c.t;
      }
    }
  }

  // --- results -----------------------------------------------------------
  Solution& fail(Solution& sol) {
    sol.status = Status::NumericalFailure;
    sol.iterations = iter_;
    return sol;
  }

  Solution& finish(Solution& sol) {
    sol.iterations = iter_;
    sol.primal.assign(x_.begin(), x_.begin() + n_);
    sol.activity.assign(m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      for (int e = d_.cstart[j]; e < d_.cstart[j + 1]; ++e) {
        sol.activity[d_.rind[e]] += d_.cval[e] * sol.primal[j];
      }
    }
    double viol = 0.0;
    for (int j = 0; j < n_; ++j) viol = std::max({viol, lo_[j] - x_[j], x_[j] - hi_[j]});
    for (int i = 0; i < m_; ++i) {
      viol = std::max({viol, lo_[n_ + i] - sol.activity[i], sol.activity[i] - hi_[n_ + i]});
    }
    sol.primal_residual = viol;
    sol.objective = 0.0;
    for (int j = 0; j < n_; ++j) sol.objective += d_.cost[j] * sol.primal[j];

    sol.basis.cols.assign(st_.begin(), st_.begin() + n_);
    sol.basis.rows.assign(st_.begin() + n_, st_.end());

    if (sol.status != Status::Optimal) return sol;

    // Phase-2 multipliers at the optimal basis.
    for (int p = 0; p < m_; ++p) cb_[p] = head_[p] < n_ ? d_.cost[head_[p]] : 0.0;
    btran(cb_, pi_);
    sol.duals.resize(m_);
    for (int i = 0; i < m_; ++i) sol.duals[i] = -pi_[i];
    sol.reduced_costs.resize(n_);
    double dual_obj = 0.0;
    double dual_inf = 0.0;
    for (int j = 0; j < total_; ++j) {
      const double dj = reduced_cost(j, false);
      if (j < n_) sol.reduced_costs[j] = dj;
      switch (st_[j]) {
        case VarStatus::Basic: dual_inf = std::max(dual_inf, std::abs(dj)); break;
        case VarStatus::AtLower:
          if (lo_[j] != hi_[j]) dual_inf = std::max(dual_inf, -dj);
          dual_obj += dj * lo_[j];
          break;
        case VarStatus::AtUpper:
          dual_inf = std::max(dual_inf, dj);
          dual_obj += dj * hi_[j];
          break;
        case VarStatus::Free: dual_inf = std::max(dual_inf, std::abs(dj)); break;
      }
    }
    sol.dual_residual = dual_inf;
    sol.duality_gap = std::abs(sol.objective - dual_obj);
    if (sol.primal_residual > opt_.tol.feasibility * 10) sol.status = Status::NumericalFailure;
    return sol;
  }

  struct Candidate {
    int pos;
    double t;
    bool upper;
  };

  const Data& d_;
  int n_, m_, total_;
  LpOptions opt_;
  long max_iter_ = 0;
  long iter_ = 0;
  bool phase1_ = true;
  // 0: original bounds, 1: perturbed, 2: restored (no further perturbation).
  int perturbed_ = 0;
  std::vector<double> orig_lo_, orig_hi_;

  std::vector<double> lo_, hi_, x_;
  std::vector<VarStatus> st_;
  std::vector<int> head_, pos_;

  std::vector<int> kcols_, r1rows_, in_r1_, base_pos_;
  Eigen::MatrixXd kernel_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<Eta> etas_;

  std::vector<double> work_, alpha_, cb_, pi_, acc_, tmp_;
  std::vector<Candidate> candidates_;
};

}  // namespace

SimplexSolver::SimplexSolver(const LpProblem& problem) : data_(std::make_unique<Data>()) {
  problem.validate();
  Data& d = *data_;
  d.n = problem.num_cols();
  d.m = problem.num_rows();
  d.cost = problem.cost();
  d.col_lo = problem.col_lo();
  d.col_hi = problem.col_hi();
  d.row_lo = problem.row_lo();
  d.row_hi = problem.row_hi();
  const auto& rs = problem.row_start();
  const auto& ec = problem.entry_col();
  const auto& ev = problem.entry_val();
  d.cstart.assign(d.n + 1, 0);
  for (int c : ec) ++d.cstart[c + 1];
  std::partial_sum(d.cstart.begin(), d.cstart.end(), d.cstart.begin());
  d.rind.resize(ec.size());
  d.cval.resize(ec.size());
  std::vector<int> fill(d.cstart.begin(), d.cstart.end() - 1);
  for (int i = 0; i < d.m; ++i) {
    for (int k = rs[i]; k < rs[i + 1]; ++k) {
      const int slot = fill[ec[k]]++;
      d.rind[slot] = i;
      d.cval[slot] = ev[k];
    }
  }
}

int SimplexSolver::num_cols() const { return data_->n; }
int SimplexSolver::num_rows() const { return data_->m; }

SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

Solution SimplexSolver::solve(const LpOptions& options, const Basis* warm_start) const {
  return solve(data_->col_lo, data_->col_hi, options, warm_start);
}

Solution SimplexSolver::solve(std::span<const double> col_lo, std::span<const double> col_hi,
                              const LpOptions& options, const Basis* warm_start) const {
  if (static_cast<int>(col_lo.size()) != data_->n || static_cast<int>(col_hi.size()) != data_->n) {
    throw Error(ErrorCode::DimensionMismatch, "column bound vectors do not match problem");
  }
  Engine engine(*data_, col_lo, col_hi, options);
  return engine.run(warm_start);
}

Solution solve_lp(const LpProblem& problem, const LpOptions& options, const Basis* warm_start) {
  return SimplexSolver(problem).solve(options, warm_start);
}

}  // namespace flexagg::lp
