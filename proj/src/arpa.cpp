#include <algorithm>
#include <cmath>
#include <sstream>

#include "aro_common.hpp"
#include "flexagg/aro.hpp"
#include "flexagg/error.hpp"
#include "flexagg/parallel.hpp"

namespace flexagg::aro {
namespace {

constexpr double kDegenerate = 1e-9;

struct Frame {
  double c, s;
  explicit Frame(double theta) : c(std::cos(theta)), s(std::sin(theta)) {}
  // Y e = a1 (r1 . e) r1 + a2 (r2 . e) r2 with r1 = (c, s), r2 = (-s, c).
  Eigen::Vector2d r1() const { return {c, s}; }
  Eigen::Vector2d r2() const { return {-s, c}; }
};

Eigen::Matrix2d shape(const Frame& f, double a1, double a2) {
  Eigen::Matrix2d R;
  R.col(0) = f.r1();
  R.col(1) = f.r2();
  return R * Eigen::Vector2d(a1, a2).asDiagonal() * R.transpose();
}

std::vector<int> sparse_row(const Eigen::MatrixXd& M, int t, int offset, std::vector<double>& val) {
  std::vector<int> idx;
  val.clear();
  for (int j = 0; j < M.cols(); ++j) {
    if (M(t, j) != 0.0) {
      idx.push_back(offset + j);
      val.push_back(M(t, j));
    }
  }
  return idx;
}

std::vector<double> arpa_big_m(const compact::CompactModel& model, const AroOptions& opt) {
  return detail::base_big_m(model, {&model.D, &model.F}, {&model.g, &model.h}, opt);
}

ArpaSub sub_with_bounds(const compact::CompactModel& model, const PolyhedralU2& u2,
                        const std::vector<EllipsePeriod>& periods, const ArpaOptions& opt,
                        std::vector<double> m) {
  const int T = model.horizon;
  const int n = static_cast<int>(u2.points.size());
  for (int attempt = 0;; ++attempt) {
    lp::MilpProblem milp;
    auto& lp = milp.lp;
    const detail::DualBlock blk = detail::add_dual_block(lp, model, {&model.D, &model.F}, m);
    std::vector<std::vector<int>> z(T, std::vector<int>(n));
    for (int t = 0; t < T; ++t) {
      const auto& e = periods[t].shape;
      const int lam = blk.mult[t];
      const int rho = blk.mult[T + t];
      if (lam >= 0) lp.cost()[lam] = -(e.pc - model.g[t]);
      if (rho >= 0) lp.cost()[rho] = -(e.qc - model.h[t]);
      std::vector<double> ones(n, 1.0);
      for (int i = 0; i < n; ++i) {
        z[t][i] = lp.add_variable(0.0, 0.0, 1.0);
        milp.binaries.push_back(z[t][i]);
      }
      lp.add_eq(z[t], ones, 1.0);
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d img = e.Y * u2.points[i];
        // nu = z * phi with phi = img_p lambda + img_q rho.
        std::vector<int> idx;
        std::vector<double> val;
        double M = 1e-9;
        if (lam >= 0) {
          idx.push_back(lam);
          val.push_back(-img[0]);
          M += std::abs(img[0]) * m[t];
        }
        if (rho >= 0) {
          idx.push_back(rho);
          val.push_back(-img[1]);
          M += std::abs(img[1]) * m[T + t];
        }
        const int nu = lp.add_variable(-1.0, -M, M);
        const int zc = z[t][i];
        lp.add_le(std::vector<int>{nu, zc}, std::vector<double>{1.0, -M}, 0.0);
        lp.add_le(std::vector<int>{nu, zc}, std::vector<double>{-1.0, -M}, 0.0);
        idx.push_back(nu);
        val.push_back(1.0);
        idx.push_back(zc);
        val.push_back(-M);
        lp.add_ge(idx, val, -M);
        val.back() = M;
        lp.add_le(idx, val, M);
      }
    }
    const lp::Solution s = lp::solve_milp(milp, opt.aro.milp);
    if (s.status != lp::Status::Optimal) {
      throw Error(ErrorCode::NumericalFailure,
                  std::string("ARPA sub-problem ended with status ") + lp::to_string(s.status));
    }
    ArpaSub out;
    out.violation = std::max(0.0, -s.objective);
    out.point.assign(T, 0);
    std::vector<double> p(T), q(T);
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) {
        if (s.primal[z[t][i]] > 0.5) out.point[t] = i;
      }
      const Eigen::Vector2d at = periods[t].shape.point(u2.points[out.point[t]]);
      p[t] = at[0];
      q[t] = at[1];
    }

    bool hit = false;
    for (std::size_t k = 0; k < blk.mult.size(); ++k) {
      const int c = blk.mult[k];
      if (c >= 0 && std::abs(s.primal[c]) >= m[k] * (1.0 - 1e-9) - 1e-9) hit = true;
    }
    const double primal = detail::slack_tracking(model, {&model.D, &model.F},
                                                 {&model.g, &model.h}, {&p, &q}, opt.aro.lp);
    if (!std::isfinite(primal)) {
      out.violation = primal;
      return out;
    }
    if (primal > out.violation + 1e-6 + 1e-7 * std::abs(primal)) hit = true;
    if (!hit) return out;
    if (attempt >= opt.aro.big_m_retries) {
      throw Error(ErrorCode::BigMTooSmall,
                  "ARPA sub-problem multiplier bound still active after " +
                      std::to_string(attempt) + " retries at points " +
                      detail::format_vector(out.point));
    }
    for (auto& v : m) v *= 10.0;
  }
}

std::string pool_text(const std::vector<PqScenario>& pool) {
  std::string s;
  for (const auto& sc : pool) s += (s.empty() ? "" : " ") + detail::format_vector(sc.point);
  return s;
}

EllipseSchedule run_fixed(const compact::CompactModel& model, const PolyhedralU2& u2, double theta,
                          const std::vector<double>& m, const ArpaOptions& opt) {
  const int T = model.horizon;
  long full = 1;
  for (int t = 0; t < T && full < 4096; ++t) full *= static_cast<long>(u2.points.size());
  const long max_rounds = opt.aro.max_rounds > 0 ? opt.aro.max_rounds : std::min(full, 4096L);

  EllipseSchedule out;
  out.theta = theta;
  for (int i = 0; i < static_cast<int>(u2.points.size()); ++i) {
    out.pool.push_back({std::vector<int>(T, i), "init"});
  }
  for (int round = 1;; ++round) {
    const ArpaMaster master = solve_master_arpa(model, u2, out.pool, theta, opt);
    const ArpaSub sub = sub_with_bounds(model, u2, master.periods, opt, m);
    out.log.push_back({round, master.objective, sub.violation, sub.point});
    out.periods = master.periods;
    out.objective = master.objective;
    if (sub.violation <= opt.aro.eps) return out;
    for (const auto& sc : out.pool) {
      if (sc.point == sub.point) {
        std::ostringstream msg;
        msg << "extreme-point assignment " << detail::format_vector(sub.point)
            << " repeated with f_S = " << sub.violation << "; pool: " << pool_text(out.pool);
        throw Error(ErrorCode::BigMTooSmall, msg.str());
      }
    }
    if (round >= max_rounds) {
      std::ostringstream msg;
      msg << "no convergence after " << round << " rounds, last f_S = " << sub.violation
          << "; pool: " << pool_text(out.pool);
      throw Error(ErrorCode::MaxRounds, msg.str());
    }
    out.pool.push_back({sub.point, "round " + std::to_string(round)});
  }
}

}  // namespace

PolyhedralU2 u2_extreme_points(int n_squares) {
  if (n_squares < 2) throw Error(ErrorCode::BadArity, "n_squares must be at least 2");
  PolyhedralU2 u;
  const int sides = 4 * n_squares;
  u.halfspaces = der::polygonize_circle(1.0, sides, der::PolygonMode::Circumscribed);
  for (int k = 0; k < sides; ++k) {
    const auto& a = u.halfspaces[k];
    const auto& b = u.halfspaces[(k + 1) % sides];
    Eigen::Matrix2d A;
    A << a.a, a.b, b.a, b.b;
    u.points.push_back(A.partialPivLu().solve(Eigen::Vector2d(a.c, b.c)));
  }
  return u;
}

ArpaMaster solve_master_arpa(const compact::CompactModel& model, const PolyhedralU2& u2,
                             const std::vector<PqScenario>& pool, double theta,
                             const ArpaOptions& opt) {
  model.require_polyhedral();
  const int T = model.horizon;
  const int n = model.dim();
  const Frame f(theta);

  lp::LpProblem lp;
  std::vector<int> pc(T), qc(T), a1(T), a2(T), u1(T), u2c(T);
  for (int t = 0; t < T; ++t) {
    pc[t] = lp.add_variable(0.0, -lp::kInf, lp::kInf);
    qc[t] = lp.add_variable(0.0, -lp::kInf, lp::kInf);
    a1[t] = lp.add_variable(0.0, 0.0, lp::kInf);
    a2[t] = lp.add_variable(0.0, 0.0, lp::kInf);
    u1[t] = lp.add_variable(-1.0, -lp::kInf, lp::kInf);
    u2c[t] = lp.add_variable(-1.0, -lp::kInf, lp::kInf);
  }
  for (const auto& sc : pool) {
    if (static_cast<int>(sc.point.size()) != T) {
      throw Error(ErrorCode::DimensionMismatch, "scenario length differs from the horizon");
    }
    const int off = lp.num_cols();
    for (int j = 0; j < n; ++j) lp.add_variable(0.0, -lp::kInf, lp::kInf);
    for (int t = 0; t < T; ++t) {
      const Eigen::Vector2d& e = u2.points.at(sc.point[t]);
      const double v1 = f.r1().dot(e);
      const double v2 = f.r2().dot(e);
      std::vector<double> val;
      std::vector<int> idx = sparse_row(model.D, t, off, val);
      idx.insert(idx.end(), {pc[t], a1[t], a2[t]});
      val.insert(val.end(), {-1.0, -v1 * f.r1()[0], -v2 * f.r2()[0]});
      lp.add_eq(idx, val, -model.g[t]);
      idx = sparse_row(model.F, t, off, val);
      idx.insert(idx.end(), {qc[t], a1[t], a2[t]});
      val.insert(val.end(), {-1.0, -v1 * f.r1()[1], -v2 * f.r2()[1]});
      lp.add_eq(idx, val, -model.h[t]);
    }
    compact::append_rows(lp, model, off);
  }

  // Tangent cuts u <= log(y0) + (y - y0) / y0 on the hypograph of log.
  int cuts = 0;
  auto add_cut = [&](int u, int y, double y0) {
    lp.add_le(std::vector<int>{u, y}, std::vector<double>{1.0, -1.0 / y0}, std::log(y0) - 1.0);
    ++cuts;
  };
  for (int t = 0; t < T; ++t) {
    for (double y0 : {1e-3, 1.0, 10.0, 100.0}) {
      add_cut(u1[t], a1[t], y0);
      add_cut(u2c[t], a2[t], y0);
    }
  }

  lp::Solution s;
  lp::Basis warm;
  for (int iter = 0;; ++iter) {
    s = lp::solve_lp(lp, opt.aro.lp, warm.cols.empty() ? nullptr : &warm);
    if (s.status == lp::Status::Infeasible) {
      throw Error(ErrorCode::Infeasible,
                  "ARPA master: no feasible operation for the pooled scenarios");
    }
    if (s.status != lp::Status::Optimal) {
      throw Error(ErrorCode::NumericalFailure,
                  std::string("ARPA master ended with status ") + lp::to_string(s.status));
    }
    const int before = lp.num_rows();
    for (int t = 0; t < T; ++t) {
      for (auto [u, y] : {std::pair{u1[t], a1[t]}, std::pair{u2c[t], a2[t]}}) {
        const double yv = s.primal[y];
        if (yv < kDegenerate) continue;
        if (s.primal[u] - std::log(yv) > opt.cut_tol) add_cut(u, y, yv);
      }
    }
    if (lp.num_rows() == before) break;
    if (iter >= 2000) {
      throw Error(ErrorCode::NumericalFailure, "ARPA master: log cuts did not close the gap");
    }
    warm = s.basis;
    warm.rows.resize(lp.num_rows(), lp::VarStatus::Basic);
  }

  ArpaMaster out;
  out.cuts = cuts;
  out.cut_objective = -s.objective;
  for (int t = 0; t < T; ++t) {
    EllipsePeriod e;
    e.theta = theta;
    e.a1 = std::max(0.0, s.primal[a1[t]]);
    e.a2 = std::max(0.0, s.primal[a2[t]]);
    e.degenerate = e.a1 < kDegenerate || e.a2 < kDegenerate;
    e.shape.pc = s.primal[pc[t]];
    e.shape.qc = s.primal[qc[t]];
    e.shape.Y = shape(f, e.a1, e.a2);
    out.objective += std::log(e.a1) + std::log(e.a2);
    out.periods.push_back(e);
  }
  return out;
}

ArpaSub solve_sub_arpa(const compact::CompactModel& model, const PolyhedralU2& u2,
                       const std::vector<EllipsePeriod>& periods, const ArpaOptions& opt) {
  model.require_polyhedral();
  if (static_cast<int>(periods.size()) != model.horizon) {
    throw Error(ErrorCode::DimensionMismatch, "schedule length differs from the horizon");
  }
  return sub_with_bounds(model, u2, periods, opt, arpa_big_m(model, opt.aro));
}

EllipseSchedule solve_arpa(const compact::CompactModel& model, const ArpaOptions& opt) {
  model.require_polyhedral();
  if (!(opt.aro.eps > 0.0)) throw Error(ErrorCode::ConfigError, "tolerance must be positive");
  if (opt.thetas.empty()) throw Error(ErrorCode::ConfigError, "no rotation angle given");
  const PolyhedralU2 u2 = u2_extreme_points(opt.n_squares);
  const std::vector<double> m = arpa_big_m(model, opt.aro);

  std::vector<EllipseSchedule> runs(opt.thetas.size());
  parallel_for(static_cast<int>(runs.size()), opt.threads,
               [&](int k) { runs[k] = run_fixed(model, u2, opt.thetas[k], m, opt); });
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    if (runs[k].objective > runs[best].objective) best = k;
  }
  return runs[best];
}

}  // namespace flexagg::aro
