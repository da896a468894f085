#include "flexagg/disagg.hpp"

#include <cmath>
#include <random>

#include "flexagg/error.hpp"
#include "flexagg/io.hpp"
#include "flexagg/parallel.hpp"

namespace flexagg {

double Ellipse::area() const { return std::acos(-1.0) * std::abs(Y.determinant()); }

bool Ellipse::contains(double p, double q, double tol) const {
  const Eigen::Vector2d d(p - pc, q - qc);
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(Y, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector2d s = svd.singularValues();
  const double scale = std::max(s[0], 1e-300);
  if (s[0] == 0.0) return d.norm() <= tol;
  // Coordinates along the principal directions.
  const Eigen::Vector2d u = svd.matrixU().transpose() * d;
  if (s[1] <= 1e-12 * scale) {
    if (std::abs(u[1]) > tol * scale) return false;
    return std::abs(u[0]) / s[0] <= 1.0 + tol;
  }
  return std::hypot(u[0] / s[0], u[1] / s[1]) <= 1.0 + tol;
}

namespace disagg {

namespace {

struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;
  double lo, hi;
  der::Provenance prov;
};

// c * (a.x + b)^2 with a.x + b known to lie in [lo, hi] on feasible points.
struct Square {
  std::vector<int> idx;
  std::vector<double> val;
  double b = 0.0, lo = 0.0, hi = 0.0, c = 0.0;
};

double eval(const std::vector<int>& idx, const std::vector<double>& val, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[idx[k]];
  return s;
}

struct CostTerms {
  std::vector<Square> squares;
  std::vector<std::pair<int, double>> linear;
  double constant = 0.0;
};

CostTerms cost_terms(const compact::CompactModel& m, const CostParams& cost) {
  CostTerms out;
  const VariableLayout& lay = m.layout;
  const int T = m.horizon;
  for (int t = 0; t < T; ++t) {
    const double price = cost.price.at(t);
    if (price == 0.0) continue;
    for (int j = 0; j < m.dim(); ++j) {
      if (m.D(t, j) != 0.0) out.linear.emplace_back(j, price * m.D(t, j));
    }
    out.constant += price * m.g[t];
  }
  for (int d = 0; d < static_cast<int>(m.fleet.devices.size()); ++d) {
    const der::Device& dev = m.fleet.devices[d];
    auto it = cost.devices.find(dev.id);
    if (it == cost.devices.end()) continue;
    const DeviceCost& c = it->second;
    const int first = lay.device_first[d];
    const int count = lay.device_count[d];
    const double nph = static_cast<double>(dev.phases.size());
    auto active = [&](int t, Square& sq, double scale) {
      for (int k = first; k < first + count; ++k) {
        const VarRole r = lay.vars[k].role;
        if (r == VarRole::Q) continue;
        sq.idx.push_back(lay.index(t, k));
        sq.val.push_back(r == VarRole::PCha ? -scale : scale);
      }
    };
    switch (dev.kind) {
      case der::DeviceKind::ES:
        if (c.c_es == 0.0) break;
        for (int t = 0; t < T; ++t) {
          Square sq;
          active(t, sq, 1.0);
          sq.c = c.c_es;
          // Realistic mode may hold both directions at zero.
          sq.lo = nph * (dev.es.realistic ? std::min(dev.es.p_min.at(t), 0.0) : dev.es.p_min.at(t));
          sq.hi = nph * (dev.es.realistic ? std::max(dev.es.p_max.at(t), 0.0) : dev.es.p_max.at(t));
          out.squares.push_back(std::move(sq));
        }
        break;
      case der::DeviceKind::HVAC: {
        if (c.c_hv == 0.0) break;
        const der::HvacParams& h = dev.hvac;
        const double keep = 1.0 - h.alpha;
        double base = h.f0;
        for (int t = 0; t < T; ++t) {
          base = keep * base + h.alpha * h.f_out.at(t);
          Square sq;
          for (int tau = 0; tau <= t; ++tau) active(tau, sq, m.dt * h.beta * std::pow(keep, t - tau));
          sq.b = base - h.f_comfort;
          sq.c = c.c_hv;
          sq.lo = h.f_min - h.f_comfort;
          sq.hi = h.f_max - h.f_comfort;
          out.squares.push_back(std::move(sq));
        }
        break;
      }
      case der::DeviceKind::PV:
        for (int t = 0; t < T; ++t) {
          Square sq;
          active(t, sq, 1.0);
          if (c.c1_pv != 0.0) {
            for (std::size_t k = 0; k < sq.idx.size(); ++k) out.linear.emplace_back(sq.idx[k], c.c1_pv);
          }
          if (c.c2_pv == 0.0) continue;
          sq.b = -nph * dev.pv.p_max.at(t);
          sq.c = c.c2_pv;
          sq.lo = nph * (dev.pv.p_min.at(t) - dev.pv.p_max.at(t));
          sq.hi = 0.0;
          out.squares.push_back(std::move(sq));
        }
        break;
      case der::DeviceKind::DCL:
        break;
    }
  }
  for (const auto& [j, v] : m.objective) out.linear.emplace_back(j, v);
  return out;
}

lp::LpProblem rows_lp(int dim, const std::vector<SparseRow>& rows, const std::vector<int>& subset) {
  lp::LpProblem lp;
  for (int j = 0; j < dim; ++j) lp.add_variable(0.0, -lp::kInf, lp::kInf);
  for (int i : subset) lp.add_row(rows[i].idx, rows[i].val, rows[i].lo, rows[i].hi);
  return lp;
}

std::vector<SparseRow> constraint_rows(const compact::CompactModel& m, const std::vector<double>& p_reg,
                                       const std::vector<double>* q_reg) {
  std::vector<SparseRow> rows;
  for (int t = 0; t < m.horizon; ++t) {
    for (int which = 0; which < (q_reg ? 2 : 1); ++which) {
      const Eigen::MatrixXd& M = which ? m.F : m.D;
      const double r = which ? (*q_reg)[t] - m.h[t] : p_reg[t] - m.g[t];
      SparseRow row{{}, {}, r, r, {"tracking", which ? "tracking.q" : "tracking.p", t}};
      for (int j = 0; j < m.dim(); ++j) {
        if (M(t, j) != 0.0) {
          row.idx.push_back(j);
          row.val.push_back(M(t, j));
        }
      }
      rows.push_back(std::move(row));
    }
  }
  for (const auto& r : m.rows) rows.push_back({r.idx, r.val, -lp::kInf, r.rhs, r.prov});
  return rows;
}

}  // namespace

CostParams read_cost(const std::string& path) {
  const io::json j = io::read_json(path);
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::ParseError, path + ": " + what);
  };
  if (!j.is_object()) fail("expected an object");
  CostParams c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "price") {
      if (it->is_number()) {
        c.price = Series(it->get<double>());
      } else if (it->is_array() && !it->empty()) {
        std::vector<double> v;
        for (const auto& e : *it) {
          if (!e.is_number()) fail("price: expected numbers");
          v.push_back(e.get<double>());
        }
        c.price = Series(std::move(v));
      } else {
        fail("price: expected a number or array");
      }
    } else if (it.key() == "devices") {
      if (!it->is_object()) fail("devices: expected an object");
      for (auto d = it->begin(); d != it->end(); ++d) {
        DeviceCost dc;
        if (!d->is_object()) fail("devices." + d.key() + ": expected an object");
        for (auto f = d->begin(); f != d->end(); ++f) {
          if (!f->is_number()) fail("devices." + d.key() + "." + f.key() + ": expected a number");
          const double v = f->get<double>();
          if (v < 0.0) fail("devices." + d.key() + "." + f.key() + ": must be nonnegative");
          if (f.key() == "c_es") dc.c_es = v;
          else if (f.key() == "c_hv") dc.c_hv = v;
          else if (f.key() == "c1_pv") dc.c1_pv = v;
          else if (f.key() == "c2_pv") dc.c2_pv = v;
          else fail("devices." + d.key() + ": unknown field '" + f.key() + "'");
        }
        c.devices[d.key()] = dc;
      }
    } else if (it.key() != "name") {
      fail("unknown field '" + it.key() + "'");
    }
  }
  return c;
}

DispatchSchedule solve_pd(const compact::CompactModel& model, const std::vector<double>& p_reg,
                          const std::vector<double>* q_reg, const CostParams* cost,
                          const PdOptions& opt) {
  model.require_polyhedral();
  const int T = model.horizon;
  if (static_cast<int>(p_reg.size()) != T || (q_reg && static_cast<int>(q_reg->size()) != T)) {
    throw Error(ErrorCode::DimensionMismatch, "regulation trajectory length differs from T");
  }
  if (opt.segments < 1) throw Error(ErrorCode::ConfigError, "segments must be positive");
  if (cost && !cost->price.fits(T)) throw Error(ErrorCode::ConfigError, "price series is shorter than T");
  const int dim = model.dim();
  const std::vector<SparseRow> rows = constraint_rows(model, p_reg, q_reg);

  lp::LpProblem lp;
  for (int j = 0; j < dim; ++j) lp.add_variable(0.0, -lp::kInf, lp::kInf);
  for (const auto& r : rows) lp.add_row(r.idx, r.val, r.lo, r.hi);

  CostTerms terms;
  if (cost) {
    terms = cost_terms(model, *cost);
    for (const auto& [j, v] : terms.linear) lp.cost()[j] += v;
    for (const Square& sq : terms.squares) {
      if (sq.hi <= sq.lo) {
        terms.constant += sq.c * sq.lo * sq.lo;
        continue;
      }
      // Secant lines through consecutive breakpoints; their max is the
      // interpolant of e^2 on [lo, hi].
      const int s = lp.add_variable(sq.c, -lp::kInf, lp::kInf);
      std::vector<int> idx = sq.idx;
      idx.push_back(s);
      for (int k = 0; k < opt.segments; ++k) {
        const double b0 = sq.lo + (sq.hi - sq.lo) * k / opt.segments;
        const double b1 = sq.lo + (sq.hi - sq.lo) * (k + 1) / opt.segments;
        std::vector<double> val;
        for (double v : sq.val) val.push_back(-(b0 + b1) * v);
        val.push_back(1.0);
        lp.add_ge(idx, val, (b0 + b1) * sq.b - b0 * b1);
      }
    }
  }

  const lp::Solution sol = lp::solve_lp(lp, opt.lp);
  DispatchSchedule out;
  out.status = sol.status;
  if (sol.status == lp::Status::Infeasible) {
    if (opt.explain) {
      std::vector<int> keep(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) keep[i] = static_cast<int>(i);
      for (std::size_t pos = 0; pos < keep.size();) {
        std::vector<int> trial = keep;
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(pos));
        if (lp::solve_lp(rows_lp(dim, rows, trial), opt.lp).status == lp::Status::Infeasible) {
          keep = std::move(trial);
        } else {
          ++pos;
        }
      }
      for (int i : keep) out.conflict.push_back(rows[i].prov);
    }
    return out;
  }
  if (sol.status != lp::Status::Optimal) {
    throw Error(ErrorCode::NumericalFailure,
                std::string("dispatch LP ended with status ") + lp::to_string(sol.status));
  }
  out.feasible = true;
  out.x.assign(sol.primal.begin(), sol.primal.begin() + dim);
  const Eigen::Map<const Eigen::VectorXd> xv(out.x.data(), dim);
  const Eigen::VectorXd p0 = model.D * xv + model.g;
  const Eigen::VectorXd q0 = model.F * xv + model.h;
  out.p0.assign(p0.data(), p0.data() + T);
  out.q0.assign(q0.data(), q0.data() + T);
  if (cost) {
    out.objective_pwl = sol.objective + terms.constant;
    double exact = terms.constant;
    for (const auto& [j, v] : terms.linear) exact += v * out.x[j];
    for (const Square& sq : terms.squares) {
      const double e = eval(sq.idx, sq.val, out.x) + sq.b;
      exact += sq.c * e * e;
    }
    out.objective_exact = exact;
  }
  for (int d = 0; d < static_cast<int>(model.fleet.devices.size()); ++d) {
    const der::Device& dev = model.fleet.devices[d];
    out.soc.push_back(dev.kind == der::DeviceKind::ES
                          ? der::simulate_soc(dev, d, model.layout, out.x, model.dt)
                          : std::vector<double>{});
    out.temperature.push_back(dev.kind == der::DeviceKind::HVAC
                                  ? der::simulate_temperature(dev, d, model.layout, out.x, model.dt)
                                  : std::vector<double>{});
  }
  return out;
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

McReport monte_carlo_verify(const compact::CompactModel& model, const std::vector<double>& lo,
                            const std::vector<double>& hi, int n, std::uint64_t seed, int threads,
                            const lp::LpOptions& lp) {
  const int T = model.horizon;
  if (static_cast<int>(lo.size()) != T || static_cast<int>(hi.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "interval length differs from T");
  }
  if (n < 0) throw Error(ErrorCode::ConfigError, "sample count must be nonnegative");
  // Draw everything up front so the sample set does not depend on threading.
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> draws(n, std::vector<double>(T));
  for (auto& d : draws) {
    for (int t = 0; t < T; ++t) d[t] = lo[t] + unit_uniform(rng()) * (hi[t] - lo[t]);
  }
  PdOptions opt;
  opt.lp = lp;
  std::vector<char> ok(n, 0);
  parallel_for(n, threads, [&](int i) { ok[i] = solve_pd(model, draws[i], nullptr, nullptr, opt).feasible; });
  McReport rep;
  rep.n = n;
  for (int i = 0; i < n; ++i) {
    if (ok[i]) {
      ++rep.feasible_count;
    } else {
      rep.failures.push_back(draws[i]);
    }
  }
  return rep;
}

GridScan pq_grid_scan(const compact::CompactModel& model, double p_lo, double p_hi, double q_lo,
                      double q_hi, double res, const std::optional<Ellipse>& ellipse, int threads,
                      const lp::LpOptions& lp, int period,
                      const std::vector<Eigen::Vector2d>& fixed) {
  const int T = model.horizon;
  if (period < 0 || period >= T) throw Error(ErrorCode::DimensionMismatch, "scan period out of range");
  if (T > 1 && static_cast<int>(fixed.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "P-Q scan over T > 1 needs a (p, q) per period");
  }
  if (!(res > 0.0) || !(p_lo <= p_hi) || !(q_lo <= q_hi)) {
    throw Error(ErrorCode::ConfigError, "bad scan ranges or resolution");
  }
  const int np = static_cast<int>(std::floor((p_hi - p_lo) / res + 1e-9)) + 1;
  const int nq = static_cast<int>(std::floor((q_hi - q_lo) / res + 1e-9)) + 1;
  GridScan scan;
  scan.points.resize(static_cast<std::size_t>(np) * nq);
  PdOptions opt;
  opt.lp = lp;
  parallel_for(np * nq, threads, [&](int k) {
    GridPoint& g = scan.points[k];
    g.p = p_lo + (k / nq) * res;
    g.q = q_lo + (k % nq) * res;
    std::vector<double> p(T), q(T);
    for (int t = 0; t < T && T > 1; ++t) {
      p[t] = fixed[t][0];
      q[t] = fixed[t][1];
    }
    p[period] = g.p;
    q[period] = g.q;
    g.feasible = solve_pd(model, p, &q, nullptr, opt).feasible;
    g.inside = ellipse && ellipse->contains(g.p, g.q);
  });
  for (const auto& g : scan.points) {
    scan.inside += g.inside;
    scan.inside_infeasible += g.inside && !g.feasible;
  }
  return scan;
}

}  // namespace disagg
}  // namespace flexagg
