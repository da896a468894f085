#include "flexagg/pf.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "flexagg/error.hpp"

namespace flexagg::pf {

namespace {

[[noreturn]] void layout_error(const std::string& what) {
  throw Error(ErrorCode::InconsistentLayout, what);
}

}  // namespace

Grid::Grid(NetworkModel net) : net_(std::move(net)) {
  std::map<std::string, int> bus_index;
  for (int b = 0; b < static_cast<int>(net_.buses.size()); ++b) {
    Bus& bus = net_.buses[b];
    if (!bus_index.emplace(bus.id, b).second) layout_error("duplicate bus " + bus.id);
    std::sort(bus.phases.begin(), bus.phases.end());
    if (bus.phases.empty() ||
        std::adjacent_find(bus.phases.begin(), bus.phases.end()) != bus.phases.end() ||
        bus.phases.front() < 0 || bus.phases.back() > 2) {
      layout_error("bus " + bus.id + " has an invalid phase set");
    }
  }
  auto sub_it = bus_index.find(net_.substation);
  if (sub_it == bus_index.end()) layout_error("substation bus " + net_.substation + " not found");
  if (!(net_.v_min < net_.v_max)) layout_error("voltage limits need v_min < v_max");
  if (!(net_.base_mva > 0.0)) layout_error("base_mva must be positive");

  const auto& sub_bus = net_.buses[sub_it->second];
  sub_phases_ = sub_bus.phases;
  for (int ph : sub_phases_) {
    if (std::abs(net_.v0[ph]) == 0.0) layout_error("substation voltage is zero on a phase");
  }

  // Node numbering: non-substation nodes first, then substation phases.
  std::map<std::pair<std::string, int>, int> full_index;
  for (const Bus& bus : net_.buses) {
    if (bus.id == net_.substation) continue;
    for (int ph : bus.phases) {
      full_index[{bus.id, ph}] = static_cast<int>(nodes_.size());
      nodes_.push_back({bus.id, ph});
    }
    for (int p = 0; p < 3; ++p) {
      const int a = p, b = (p + 1) % 3;
      if (std::count(bus.phases.begin(), bus.phases.end(), a) &&
          std::count(bus.phases.begin(), bus.phases.end(), b)) {
        pairs_.push_back({bus.id, p});
      }
    }
  }
  const int nl = num_nodes();
  const int ns = static_cast<int>(sub_phases_.size());
  for (int s = 0; s < ns; ++s) full_index[{net_.substation, sub_phases_[s]}] = nl + s;

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(nl + ns, nl + ns);
  std::vector<std::vector<int>> adj(net_.buses.size());
  std::vector<std::vector<std::pair<int, cplx>>> crow;
  for (int l = 0; l < static_cast<int>(net_.lines.size()); ++l) {
    const Line& line = net_.lines[l];
    auto f = bus_index.find(line.from);
    auto t = bus_index.find(line.to);
    if (f == bus_index.end() || t == bus_index.end() || line.from == line.to) {
      layout_error("line " + std::to_string(l) + " has invalid endpoints");
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double scale = std::max({1.0, std::abs(line.y[r][c]), std::abs(line.y[c][r])});
        if (std::abs(line.y[r][c] - line.y[c][r]) > 1e-12 * scale) {
          layout_error("line " + line.from + "-" + line.to + " admittance is not symmetric");
        }
      }
    }
    std::vector<int> ph;
    const auto& pf = net_.buses[f->second].phases;
    const auto& pt = net_.buses[t->second].phases;
    std::set_intersection(pf.begin(), pf.end(), pt.begin(), pt.end(), std::back_inserter(ph));
    if (ph.empty()) layout_error("line " + line.from + "-" + line.to + " shares no phase");
    adj[f->second].push_back(t->second);
    adj[t->second].push_back(f->second);
    for (int r : ph) {
      const int fr = full_index.at({line.from, r});
      const int tr = full_index.at({line.to, r});
      std::vector<std::pair<int, cplx>> row;
      for (int c : ph) {
        const int fc = full_index.at({line.from, c});
        const int tc = full_index.at({line.to, c});
        const cplx yv = line.y[r][c];
        y(fr, fc) += yv;
        y(tr, tc) += yv;
        y(fr, tc) -= yv;
        y(tr, fc) -= yv;
        row.emplace_back(fc, yv);
        row.emplace_back(tc, -yv);
      }
      line_phases_.push_back({l, r});
      crow.push_back(std::move(row));
    }
  }

  std::vector<char> seen(net_.buses.size(), 0);
  std::queue<int> bfs;
  bfs.push(sub_it->second);
  seen[sub_it->second] = 1;
  while (!bfs.empty()) {
    const int u = bfs.front();
    bfs.pop();
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        bfs.push(w);
      }
    }
  }
  for (std::size_t b = 0; b < seen.size(); ++b) {
    if (!seen[b]) layout_error("bus " + net_.buses[b].id + " is not connected to the substation");
  }

  current_map_ = Eigen::MatrixXcd::Zero(static_cast<int>(crow.size()), nl + ns);
  for (int r = 0; r < static_cast<int>(crow.size()); ++r) {
    for (const auto& [c, v] : crow[r]) current_map_(r, c) += v;
  }

  y_ll_ = y.topLeftCorner(nl, nl);
  y_l0_ = y.topRightCorner(nl, ns);
  y_0l_ = y.bottomLeftCorner(ns, nl);
  y_00_ = y.bottomRightCorner(ns, ns);
  v0_.resize(ns);
  for (int s = 0; s < ns; ++s) v0_[s] = net_.v0[sub_phases_[s]];

  if (nl > 0) {
    Eigen::FullPivLU<Eigen::MatrixXcd> rank(y_ll_);
    rank.setThreshold(1e-12);
    if (rank.rank() < nl) throw Error(ErrorCode::SingularAdmittance, "Y_LL is singular");
    lu_.compute(y_ll_);
    m_ = -lu_.solve(y_l0_ * v0_);
  } else {
    m_.resize(0);
  }

  h_ = Eigen::MatrixXd::Zero(num_pairs(), nl);
  for (int p = 0; p < num_pairs(); ++p) {
    h_(p, node(pairs_[p].bus, pairs_[p].phase)) = 1.0;
    h_(p, node(pairs_[p].bus, (pairs_[p].phase + 1) % 3)) = -1.0;
  }

  for (const auto& c : net_.connections) {
    for (int ph : c.phases) {
      const bool ok = c.kind == Connection::Wye ? node(c.bus, ph) >= 0 : pair(c.bus, ph) >= 0;
      if (!ok) layout_error("connection at " + c.bus + " references a missing phase");
    }
  }
  for (const auto& ld : net_.loads) {
    const bool ok = ld.kind == Connection::Wye ? node(ld.bus, ld.phase) >= 0
                                               : pair(ld.bus, ld.phase) >= 0;
    if (!ok) layout_error("load at " + ld.bus + " references a missing phase");
  }
}

int Grid::node(const std::string& bus, int phase) const {
  for (int n = 0; n < num_nodes(); ++n) {
    if (nodes_[n].phase == phase && nodes_[n].bus == bus) return n;
  }
  return -1;
}

int Grid::pair(const std::string& bus, int p) const {
  for (int n = 0; n < num_pairs(); ++n) {
    if (pairs_[n].phase == p && pairs_[n].bus == bus) return n;
  }
  return -1;
}

Eigen::VectorXcd Grid::currents(const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd full(v.size() + v0_.size());
  full << v, v0_;
  return current_map_ * full;
}

cplx Grid::substation_power(const Eigen::VectorXcd& v) const {
  const Eigen::VectorXcd i0 = y_0l_ * v + y_00_ * v0_;
  cplx s = 0.0;
  for (int k = 0; k < v0_.size(); ++k) s += v0_[k] * std::conj(i0[k]);
  return s;
}

Injections zero_injections(const Grid& grid) {
  return {Eigen::VectorXcd::Zero(grid.num_nodes()), Eigen::VectorXcd::Zero(grid.num_pairs())};
}

namespace {

// Node or pair index of a terminal; throws if the grid lacks it.
int terminal_slot(const Grid& grid, const Terminal& term) {
  if (grid.is_substation(term.bus)) {
    layout_error("devices cannot attach to the substation bus " + term.bus);
  }
  const int idx = term.kind == Connection::Wye ? grid.node(term.bus, term.phase)
                                               : grid.pair(term.bus, term.phase);
  if (idx < 0) layout_error("terminal at bus " + term.bus + " references a missing phase");
  return idx;
}

void check_connections(const Grid& grid, const VariableLayout& layout) {
  const auto& decl = grid.net().connections;
  for (const Terminal& term : layout.terminals) {
    terminal_slot(grid, term);
    if (decl.empty()) continue;
    bool found = false;
    for (const auto& c : decl) {
      if (c.bus == term.bus && c.kind == term.kind &&
          std::count(c.phases.begin(), c.phases.end(), term.phase)) {
        found = true;
      }
    }
    if (!found) layout_error("terminal at bus " + term.bus + " is not a declared connection");
  }
}

// conj-linear current injection for a unit of (p_inj + j q_inj) at a terminal.
Eigen::VectorXcd unit_current(const Grid& grid, const Terminal& term, cplx s_pu,
                              const Eigen::VectorXcd& v) {
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(grid.num_nodes());
  const int idx = terminal_slot(grid, term);
  if (term.kind == Connection::Wye) {
    rhs[idx] = std::conj(s_pu) / std::conj(v[idx]);
  } else {
    const int a = grid.node(term.bus, term.phase);
    const int b = grid.node(term.bus, (term.phase + 1) % 3);
    const cplx i = std::conj(s_pu) / std::conj(v[a] - v[b]);
    rhs[a] += i;
    rhs[b] -= i;
  }
  return rhs;
}

Eigen::VectorXcd injected_current(const Grid& grid, const Injections& inj,
                                  const Eigen::VectorXcd& v) {
  Eigen::VectorXcd cur(grid.num_nodes());
  for (int n = 0; n < grid.num_nodes(); ++n) cur[n] = std::conj(inj.wye[n] / v[n]);
  if (grid.num_pairs() > 0) {
    const Eigen::VectorXcd hv = grid.h().cast<cplx>() * v;
    Eigen::VectorXcd id(grid.num_pairs());
    for (int p = 0; p < grid.num_pairs(); ++p) id[p] = std::conj(inj.delta[p] / hv[p]);
    cur += grid.h().transpose().cast<cplx>() * id;
  }
  return cur;
}

}  // namespace

void add_controllable(const Grid& grid, const VariableLayout& layout, const double* x_t,
                      Injections& inj) {
  const double base = grid.net().base_mva;
  for (int k = 0; k < layout.nx(); ++k) {
    const LayoutVar& var = layout.vars[k];
    const Terminal& term = layout.terminals[var.terminal];
    const int idx = terminal_slot(grid, term);
    const cplx s = cplx(var.p_inj, var.q_inj) * (x_t[k] / base);
    (term.kind == Connection::Wye ? inj.wye : inj.delta)[idx] += s;
  }
}

void add_exogenous(const Grid& grid, int t, Injections& inj) {
  const double base = grid.net().base_mva;
  for (const auto& ld : grid.net().loads) {
    const cplx s(ld.p.at(t) / base, ld.q.at(t) / base);
    if (ld.kind == Connection::Wye) {
      inj.wye[grid.node(ld.bus, ld.phase)] -= s;
    } else {
      inj.delta[grid.pair(ld.bus, ld.phase)] -= s;
    }
  }
}

double fixed_point_residual(const Grid& grid, const Injections& inj, const Eigen::VectorXcd& v) {
  if (grid.num_nodes() == 0) return 0.0;
  const Eigen::VectorXcd next = grid.solve_y(injected_current(grid, inj, v)) + grid.m();
  return (next - v).cwiseAbs().maxCoeff();
}

PfResult solve_fixed_point_pf(const Grid& grid, const Injections& inj, const PfOptions& opt) {
  if (inj.wye.size() != grid.num_nodes() || inj.delta.size() != grid.num_pairs()) {
    throw Error(ErrorCode::DimensionMismatch, "injection vectors do not match the grid");
  }
  if (!inj.wye.allFinite() || !inj.delta.allFinite()) {
    throw Error(ErrorCode::DimensionMismatch, "injections must be finite");
  }
  PfResult res;
  res.v = grid.m();
  if (grid.num_nodes() == 0) return res;
  for (int it = 0;; ++it) {
    const Eigen::VectorXcd step =
        grid.solve_y(injected_current(grid, inj, res.v)) + grid.m() - res.v;
    res.residual = step.cwiseAbs().maxCoeff();
    res.iterations = it;
    if (!std::isfinite(res.residual)) break;
    if (res.residual <= opt.tolerance) return res;
    if (it >= opt.max_iters) break;
    res.v += step;
  }
  throw Error(ErrorCode::NonConvergence, "fixed-point load flow did not converge (residual " +
                                             std::to_string(res.residual) + ")");
}

LinearPFModel build_linear_pf(const Grid& grid, const VariableLayout& layout,
                              const Eigen::VectorXcd& v_op, const Eigen::VectorXd& x_op,
                              int t_ref) {
  check_connections(grid, layout);
  const int n = grid.num_nodes();
  const int nx = layout.nx();
  const int T = layout.horizon;
  if (v_op.size() != n || x_op.size() != nx) {
    throw Error(ErrorCode::DimensionMismatch, "operating point does not match grid and layout");
  }
  if (t_ref < 0 || t_ref >= T) throw Error(ErrorCode::DimensionMismatch, "bad reference period");
  for (const auto& ld : grid.net().loads) {
    if (!ld.p.fits(T) || !ld.q.fits(T)) {
      throw Error(ErrorCode::InconsistentLayout, "load series at " + ld.bus + " does not fit T");
    }
  }
  {
    Injections inj = zero_injections(grid);
    add_exogenous(grid, t_ref, inj);
    add_controllable(grid, layout, x_op.data(), inj);
    const double r = fixed_point_residual(grid, inj, v_op);
    if (r > 1e-8) {
      throw Error(ErrorCode::NonConvergence,
                  "operating point is not a load-flow solution (residual " + std::to_string(r) +
                      ")");
    }
  }
  const double base = grid.net().base_mva;

  LinearPFModel mdl;
  mdl.v_op = v_op;
  mdl.x_op = x_op;
  mdl.t_ref = t_ref;
  mdl.K.resize(n, nx);
  for (int k = 0; k < nx; ++k) {
    const LayoutVar& var = layout.vars[k];
    const cplx s(var.p_inj / base, var.q_inj / base);
    mdl.K.col(k) = grid.solve_y(unit_current(grid, layout.terminals[var.terminal], s, v_op));
  }
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    for (const auto& ld : grid.net().loads) {
      const cplx s(-ld.p.at(t) / base, -ld.q.at(t) / base);
      rhs += unit_current(grid, {ld.bus, ld.kind, ld.phase}, s, v_op);
    }
    mdl.k.push_back(n > 0 ? Eigen::VectorXcd(grid.solve_y(rhs) + grid.m()) : Eigen::VectorXcd());
  }

  const Eigen::VectorXd vmag = v_op.cwiseAbs();
  const Eigen::VectorXcd vconj = v_op.conjugate();
  mdl.A = (vconj.asDiagonal() * mdl.K).real();
  mdl.A = vmag.cwiseInverse().asDiagonal() * mdl.A;

  // Currents through the same complex voltage map.
  const int nc = static_cast<int>(grid.line_phases().size());
  Eigen::MatrixXcd cl(nc, n);
  Eigen::VectorXcd c0(nc);
  {
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
    c0 = grid.currents(zero);
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
      e[j] = 1.0;
      cl.col(j) = grid.currents(e) - c0;
    }
  }
  const Eigen::VectorXcd i_op = cl * v_op + c0;
  const Eigen::VectorXd imag = i_op.cwiseAbs();
  mdl.B = Eigen::MatrixXd::Zero(nc, nx);
  const Eigen::MatrixXcd ck = cl * mdl.K;
  for (int r = 0; r < nc; ++r) {
    if (imag[r] < 1e-12) continue;
    mdl.B.row(r) = (std::conj(i_op[r]) * ck.row(r)).real() / imag[r];
  }

  // Substation power, exactly affine in x.
  const Eigen::MatrixXcd s_cols = grid.y_0l() * mdl.K;
  mdl.d.resize(nx);
  mdl.f.resize(nx);
  for (int k = 0; k < nx; ++k) {
    cplx s = 0.0;
    for (int p = 0; p < grid.v0().size(); ++p) s += grid.v0()[p] * std::conj(s_cols(p, k));
    mdl.d[k] = base * s.real();
    mdl.f[k] = base * s.imag();
  }

  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXcd& kt = mdl.k[t];
    Eigen::VectorXd at(n);
    for (int j = 0; j < n; ++j) {
      at[j] = vmag[j] + (vconj[j] * (kt[j] - v_op[j])).real() / vmag[j];
    }
    mdl.a.push_back(at);

    const Eigen::VectorXcd ik = cl * kt + c0;
    const Eigen::VectorXcd i_at_op = ck * x_op + ik;
    Eigen::VectorXd bt(nc);
    for (int r = 0; r < nc; ++r) {
      if (imag[r] < 1e-12) {
        bt[r] = std::abs(i_at_op[r]);
      } else {
        bt[r] = imag[r] + (std::conj(i_op[r]) * (ik[r] - i_op[r])).real() / imag[r];
      }
    }
    mdl.b.push_back(bt);

    const cplx s0 = n > 0 ? grid.substation_power(kt) : grid.substation_power(Eigen::VectorXcd());
    mdl.g.push_back(base * s0.real());
    mdl.h.push_back(base * s0.imag());
  }
  return mdl;
}

LinearPFModel linearize(const Grid& grid, const VariableLayout& layout,
                        const Eigen::VectorXd& x_op, int t_ref, const PfOptions& opt) {
  if (x_op.size() != layout.nx()) {
    throw Error(ErrorCode::DimensionMismatch, "operating point length does not match layout");
  }
  check_connections(grid, layout);
  Injections inj = zero_injections(grid);
  add_exogenous(grid, t_ref, inj);
  add_controllable(grid, layout, x_op.data(), inj);
  const PfResult pf = solve_fixed_point_pf(grid, inj, opt);
  return build_linear_pf(grid, layout, pf.v, x_op, t_ref);
}

LinearOutput evaluate_linear(const LinearPFModel& model, const Eigen::VectorXd& x_t, int t) {
  if (x_t.size() != model.A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "x_t length does not match the model");
  }
  if (t < 0 || t >= static_cast<int>(model.a.size())) {
    throw Error(ErrorCode::DimensionMismatch, "period out of range");
  }
  LinearOutput out;
  out.v = model.A * x_t + model.a[t];
  out.i = model.B * x_t + model.b[t];
  out.p0 = model.d.dot(x_t) + model.g[t];
  out.q0 = model.f.dot(x_t) + model.h[t];
  return out;
}

LinearOutput evaluate_nonlinear(const Grid& grid, const VariableLayout& layout,
                                const Eigen::VectorXd& x_t, int t, const PfOptions& opt) {
  if (x_t.size() != layout.nx()) {
    throw Error(ErrorCode::DimensionMismatch, "x_t length does not match layout");
  }
  Injections inj = zero_injections(grid);
  add_exogenous(grid, t, inj);
  add_controllable(grid, layout, x_t.data(), inj);
  const PfResult pf = solve_fixed_point_pf(grid, inj, opt);
  LinearOutput out;
  out.v = pf.v.cwiseAbs();
  out.i = grid.currents(pf.v).cwiseAbs();
  const cplx s0 = grid.substation_power(pf.v);
  out.p0 = grid.net().base_mva * s0.real();
  out.q0 = grid.net().base_mva * s0.imag();
  return out;
}

}  // namespace flexagg::pf
