#include <algorithm>
#include <cmath>
#include <sstream>

#include "aro_common.hpp"
#include "flexagg/aro.hpp"
#include "flexagg/error.hpp"

namespace flexagg::aro {
namespace {

const Eigen::MatrixXd& track_matrix(const compact::CompactModel& m, const AroOptions& opt) {
  return opt.reactive ? m.F : m.D;
}
const Eigen::VectorXd& track_offset(const compact::CompactModel& m, const AroOptions& opt) {
  return opt.reactive ? m.h : m.g;
}

/// Phase-summed active power of a device in period t as a sparse row.
void device_power_row(const VariableLayout& lay, int device, int t, int offset, double sign,
                      std::vector<int>& idx, std::vector<double>& val) {
  const int first = lay.device_first[device];
  for (int k = first; k < first + lay.device_count[device]; ++k) {
    double c = 0.0;
    switch (lay.vars[k].role) {
      case VarRole::P:
      case VarRole::PDis: c = 1.0; break;
      case VarRole::PCha: c = -1.0; break;
      case VarRole::Q: break;
    }
    if (c != 0.0) {
      idx.push_back(offset + lay.index(t, k));
      val.push_back(sign * c);
    }
  }
}

int find_constant(const std::vector<Scenario>& pool, int value) {
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (std::all_of(pool[k].xi.begin(), pool[k].xi.end(), [&](int v) { return v == value; })) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

/// Method 1 ordering rows between the xi = 1 and xi = 0 copies.
void add_heuristic_rows(lp::LpProblem& lp, const compact::CompactModel& model, int off_hi,
                        int off_lo) {
  const auto& lay = model.layout;
  for (int d = 0; d < static_cast<int>(model.fleet.devices.size()); ++d) {
    const auto kind = model.fleet.devices[d].kind;
    if (kind != der::DeviceKind::ES && kind != der::DeviceKind::HVAC) continue;
    // ES: p(x^hi) <= p(x^lo). HVAC: p(x^lo) <= p(x^hi).
    const int first = kind == der::DeviceKind::ES ? off_hi : off_lo;
    const int second = kind == der::DeviceKind::ES ? off_lo : off_hi;
    for (int t = 0; t < model.horizon; ++t) {
      std::vector<int> idx;
      std::vector<double> val;
      device_power_row(lay, d, t, first, 1.0, idx, val);
      device_power_row(lay, d, t, second, -1.0, idx, val);
      lp.add_le(idx, val, 0.0, "method1:" + model.fleet.devices[d].id);
    }
  }
}

ApaSub sub_with_bounds(const compact::CompactModel& model, const std::vector<double>& lo,
                       const std::vector<double>& hi, const AroOptions& opt,
                       std::vector<double> m) {
  const int T = model.horizon;
  const Eigen::MatrixXd& D = track_matrix(model, opt);
  const Eigen::VectorXd& g = track_offset(model, opt);

  for (int attempt = 0;; ++attempt) {
    lp::MilpProblem milp;
    auto& lp = milp.lp;
    const detail::DualBlock blk = detail::add_dual_block(lp, model, {&D}, m);
    std::vector<int> xi_col(T), nu_col(T, -1);
    for (int t = 0; t < T; ++t) {
      const int lam = blk.mult[t];
      xi_col[t] = lp.add_variable(0.0, 0.0, lam < 0 ? 0.0 : 1.0);
      milp.binaries.push_back(xi_col[t]);
      if (lam < 0) continue;
      const double M = m[t];
      lp.cost()[lam] = -(lo[t] - g[t]);
      nu_col[t] = lp.add_variable(-(hi[t] - lo[t]), -M, M);
      const int nu = nu_col[t];
      const int x = xi_col[t];
      // nu = lambda * xi for binary xi and |lambda| <= M.
      lp.add_le(std::vector<int>{nu, x}, std::vector<double>{1.0, -M}, 0.0);
      lp.add_le(std::vector<int>{nu, x}, std::vector<double>{-1.0, -M}, 0.0);
      lp.add_ge(std::vector<int>{nu, lam, x}, std::vector<double>{1.0, -1.0, -M}, -M);
      lp.add_le(std::vector<int>{nu, lam, x}, std::vector<double>{1.0, -1.0, M}, M);
    }
    const lp::Solution s = lp::solve_milp(milp, opt.milp);
    if (s.status != lp::Status::Optimal) {
      throw Error(ErrorCode::NumericalFailure,
                  std::string("APA sub-problem ended with status ") + lp::to_string(s.status));
    }
    ApaSub out;
    out.violation = std::max(0.0, -s.objective);
    out.bounds = m;
    out.xi.resize(T);
    std::vector<double> p(T);
    for (int t = 0; t < T; ++t) {
      out.xi[t] = s.primal[xi_col[t]] > 0.5 ? 1 : 0;
      p[t] = out.xi[t] ? hi[t] : lo[t];
    }

    // Validate: no multiplier at its bound and the primal slack LP agrees.
    bool hit = false;
    for (int t = 0; t < T; ++t) {
      const int lam = blk.mult[t];
      if (lam >= 0 && std::abs(s.primal[lam]) >= m[t] * (1.0 - 1e-9) - 1e-9) hit = true;
    }
    const double primal = detail::slack_tracking(model, {&D}, {&g}, {&p}, opt.lp);
    if (!std::isfinite(primal)) {
      // A period without controllable power asked to move: no dispatch exists.
      out.violation = primal;
      return out;
    }
    if (primal > out.violation + 1e-6 + 1e-7 * std::abs(primal)) hit = true;
    if (!hit) return out;
    if (attempt >= opt.big_m_retries) {
      throw Error(ErrorCode::BigMTooSmall,
                  "APA sub-problem multiplier bound still active after " +
                      std::to_string(attempt) + " retries at xi = " +
                      detail::format_vector(out.xi));
    }
    for (auto& v : m) v *= 10.0;
  }
}

std::vector<double> apa_big_m(const compact::CompactModel& model, const AroOptions& opt) {
  const Eigen::MatrixXd& D = track_matrix(model, opt);
  const Eigen::VectorXd& g = track_offset(model, opt);
  return detail::base_big_m(model, {&D}, {&g}, opt);
}

std::string pool_text(const std::vector<Scenario>& pool) {
  std::string s;
  for (const auto& sc : pool) s += (s.empty() ? "" : " ") + detail::format_vector(sc.xi);
  return s;
}

}  // namespace

ApaMaster solve_master_apa(const compact::CompactModel& model, const std::vector<Scenario>& pool,
                           const AroOptions& opt) {
  model.require_polyhedral();
  const int T = model.horizon;
  const int n = model.dim();
  const Eigen::MatrixXd& D = track_matrix(model, opt);
  const Eigen::VectorXd& g = track_offset(model, opt);

  lp::LpProblem lp;
  std::vector<int> lo_col(T), hi_col(T);
  for (int t = 0; t < T; ++t) {
    lo_col[t] = lp.add_variable(1.0, -lp::kInf, lp::kInf, "lo" + std::to_string(t));
    hi_col[t] = lp.add_variable(-1.0, -lp::kInf, lp::kInf, "hi" + std::to_string(t));
    lp.add_ge(std::vector<int>{hi_col[t], lo_col[t]}, std::vector<double>{1.0, -1.0}, 0.0);
  }
  std::vector<int> offset;
  for (const auto& sc : pool) {
    if (static_cast<int>(sc.xi.size()) != T) {
      throw Error(ErrorCode::DimensionMismatch, "scenario length differs from the horizon");
    }
    const int off = lp.num_cols();
    offset.push_back(off);
    for (int j = 0; j < n; ++j) lp.add_variable(0.0, -lp::kInf, lp::kInf);
    for (int t = 0; t < T; ++t) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int j = 0; j < n; ++j) {
        if (D(t, j) != 0.0) {
          idx.push_back(off + j);
          val.push_back(D(t, j));
        }
      }
      idx.push_back(sc.xi[t] ? hi_col[t] : lo_col[t]);
      val.push_back(-1.0);
      lp.add_eq(idx, val, -g[t]);
    }
    compact::append_rows(lp, model, off);
  }
  if (opt.heuristic) {
    const int one = find_constant(pool, 1);
    const int zero = find_constant(pool, 0);
    if (one >= 0 && zero >= 0) add_heuristic_rows(lp, model, offset[one], offset[zero]);
  }

  const lp::Solution s = lp::solve_lp(lp, opt.lp);
  if (s.status == lp::Status::Infeasible) {
    throw Error(ErrorCode::Infeasible, "APA master: no feasible operation for the pooled scenarios");
  }
  if (s.status != lp::Status::Optimal) {
    throw Error(ErrorCode::NumericalFailure,
                std::string("APA master ended with status ") + lp::to_string(s.status));
  }
  ApaMaster out;
  for (int t = 0; t < T; ++t) {
    out.lo.push_back(s.primal[lo_col[t]]);
    out.hi.push_back(std::max(s.primal[hi_col[t]], out.lo.back()));
  }
  out.objective = -s.objective;
  for (int off : offset) out.recourse.emplace_back(s.primal.begin() + off, s.primal.begin() + off + n);
  return out;
}

ApaSub solve_sub_apa(const compact::CompactModel& model, const std::vector<double>& lo,
                     const std::vector<double>& hi, const AroOptions& opt) {
  model.require_polyhedral();
  const int T = model.horizon;
  if (static_cast<int>(lo.size()) != T || static_cast<int>(hi.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "interval length differs from the horizon");
  }
  return sub_with_bounds(model, lo, hi, opt, apa_big_m(model, opt));
}

FeasibleIntervals solve_apa(const compact::CompactModel& model, const AroOptions& opt) {
  model.require_polyhedral();
  if (!(opt.eps > 0.0)) throw Error(ErrorCode::ConfigError, "tolerance must be positive");
  const int T = model.horizon;
  const long full = T < 30 ? (1L << T) : (1L << 30);
  const long max_rounds = opt.max_rounds > 0 ? opt.max_rounds : full;

  FeasibleIntervals out;
  out.pool.push_back({std::vector<int>(T, 1), "init"});
  out.pool.push_back({std::vector<int>(T, 0), "init"});
  const std::vector<double> m = apa_big_m(model, opt);

  for (int round = 1;; ++round) {
    const ApaMaster master = solve_master_apa(model, out.pool, opt);
    const ApaSub sub = sub_with_bounds(model, master.lo, master.hi, opt, m);
    RoundLog entry;
    entry.round = round;
    entry.f_master = master.objective;
    entry.f_sub = sub.violation;
    entry.xi = sub.xi;
    entry.big_m = sub.bounds.empty() ? 0.0 : *std::max_element(sub.bounds.begin(), sub.bounds.end());
    out.log.push_back(entry);
    out.lo = master.lo;
    out.hi = master.hi;
    out.objective = master.objective;
    if (sub.violation <= opt.eps) return out;

    for (const auto& sc : out.pool) {
      if (sc.xi == sub.xi) {
        std::ostringstream msg;
        msg << "scenario " << detail::format_vector(sub.xi) << " repeated with f_S = "
            << sub.violation << "; pool: " << pool_text(out.pool);
        throw Error(ErrorCode::BigMTooSmall, msg.str());
      }
    }
    if (round >= max_rounds) {
      std::ostringstream msg;
      msg << "no convergence after " << round << " rounds, last f_S = " << sub.violation
          << "; pool: " << pool_text(out.pool);
      throw Error(ErrorCode::MaxRounds, msg.str());
    }
    out.pool.push_back({sub.xi, "round " + std::to_string(round)});
  }
}

double aggregate_flexibility(const std::vector<double>& lo, const std::vector<double>& hi,
                             double dt) {
  if (lo.size() != hi.size()) throw Error(ErrorCode::DimensionMismatch, "interval lengths differ");
  double e = 0.0;
  for (std::size_t t = 0; t < lo.size(); ++t) e += (hi[t] - lo[t]) * dt;
  return e;
}

}  // namespace flexagg::aro
