#include "flexagg/compact.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flexagg/error.hpp"
#include "flexagg/mps.hpp"

namespace flexagg::compact {

namespace {

// Appends idx.val <= rhs scaled to unit inf-norm. Constant rows are dropped
// when satisfied and rejected otherwise.
void push_row(CompactModel& m, std::vector<int> idx, std::vector<double> val, double rhs,
              der::Provenance prov) {
  double s = 0.0;
  for (double v : val) s = std::max(s, std::abs(v));
  if (s == 0.0) {
    if (rhs < -1e-12) {
      throw Error(ErrorCode::Infeasible,
                  "constant row " + prov.device + "/" + prov.tag + " is violated");
    }
    return;
  }
  for (double& v : val) v /= s;
  m.rows.push_back({std::move(idx), std::move(val), rhs / s, std::move(prov)});
}

void append_blocks(CompactModel& m, const std::vector<der::ConstraintBlock>& blocks) {
  for (const auto& blk : blocks) {
    for (const auto& r : blk.rows) {
      for (int j : r.idx) {
        if (j < 0 || j >= m.dim()) {
          throw Error(ErrorCode::DimensionMismatch, "block row references column " +
                                                        std::to_string(j) + " outside x");
        }
      }
      push_row(m, r.idx, r.val, r.rhs, r.prov);
    }
    m.objective.insert(m.objective.end(), blk.objective.begin(), blk.objective.end());
  }
}

}  // namespace

void CompactModel::require_polyhedral() const {
  if (conic()) {
    throw Error(ErrorCode::ConicPresent,
                std::to_string(conics.size()) + " conic terms; enable polygonization");
  }
}

Eigen::MatrixXd CompactModel::W() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_rows(), dim());
  for (int i = 0; i < num_rows(); ++i) {
    for (std::size_t k = 0; k < rows[i].idx.size(); ++k) out(i, rows[i].idx[k]) += rows[i].val[k];
  }
  return out;
}

Eigen::VectorXd CompactModel::w() const {
  Eigen::VectorXd out(num_rows());
  for (int i = 0; i < num_rows(); ++i) out[i] = rows[i].rhs;
  return out;
}

double CompactModel::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (const auto& r : rows) {
    double a = 0.0;
    for (std::size_t k = 0; k < r.idx.size(); ++k) a += r.val[k] * x[r.idx[k]];
    worst = std::max(worst, a - r.rhs);
  }
  return worst;
}

NetworkLimits network_limits(const pf::Grid& grid) {
  NetworkLimits lim;
  lim.v_min = grid.net().v_min;
  lim.v_max = grid.net().v_max;
  lim.i_min = grid.net().i_min;
  for (const auto& lp : grid.line_phases()) lim.i_max.push_back(grid.net().lines[lp.line].i_max);
  return lim;
}

CompactModel assemble(const pf::LinearPFModel& lin, const NetworkLimits& limits,
                      const VariableLayout& layout, const std::vector<der::ConstraintBlock>& blocks,
                      double dt, const AssembleOptions& opt) {
  const int T = layout.horizon;
  const int nx = layout.nx();
  if (lin.A.cols() != nx || static_cast<int>(lin.a.size()) != T ||
      static_cast<int>(lin.b.size()) != T || lin.B.rows() != static_cast<Eigen::Index>(limits.i_max.size())) {
    throw Error(ErrorCode::DimensionMismatch, "linear model does not match layout or limits");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  CompactModel m;
  m.layout = layout;
  m.horizon = T;
  m.dt = dt;
  m.has_network = true;
  m.D = Eigen::MatrixXd::Zero(T, layout.dim());
  m.F = Eigen::MatrixXd::Zero(T, layout.dim());
  m.g.resize(T);
  m.h.resize(T);
  for (int t = 0; t < T; ++t) {
    m.D.block(t, t * nx, 1, nx) = lin.d.transpose();
    m.F.block(t, t * nx, 1, nx) = lin.f.transpose();
    m.g[t] = lin.g[t];
    m.h[t] = lin.h[t];
  }

  // Network tags carry the node or line-phase index of the grid.
  for (int t = 0; t < T; ++t) {
    auto add = [&](const Eigen::RowVectorXd& coef, double sign, double rhs, const std::string& tag) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int k = 0; k < nx; ++k) {
        if (coef[k] != 0.0) {
          idx.push_back(layout.index(t, k));
          val.push_back(sign * coef[k]);
        }
      }
      push_row(m, std::move(idx), std::move(val), rhs, {"network", tag, t});
    };
    if (opt.voltage_limits) {
      for (int n = 0; n < lin.A.rows(); ++n) {
        const std::string id = std::to_string(n);
        add(lin.A.row(n), 1.0, limits.v_max - lin.a[t][n], "network.v_max:" + id);
        add(lin.A.row(n), -1.0, lin.a[t][n] - limits.v_min, "network.v_min:" + id);
      }
    }
    if (opt.current_limits) {
      for (int r = 0; r < lin.B.rows(); ++r) {
        const std::string id = std::to_string(r);
        if (std::isfinite(limits.i_max[r])) {
          add(lin.B.row(r), 1.0, limits.i_max[r] - lin.b[t][r], "network.i_max:" + id);
        }
        if (limits.i_min > 0.0) {
          add(lin.B.row(r), -1.0, lin.b[t][r] - limits.i_min, "network.i_min:" + id);
        }
      }
    }
  }
  append_blocks(m, blocks);
  return m;
}

CompactModel assemble_copper_plate(const VariableLayout& layout,
                                   const std::vector<der::ConstraintBlock>& blocks, double dt,
                                   const Series& load_p, const Series& load_q) {
  const int T = layout.horizon;
  const int nx = layout.nx();
  if (!load_p.fits(T) || !load_q.fits(T)) {
    throw Error(ErrorCode::DimensionMismatch, "load series does not fit the horizon");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  CompactModel m;
  m.layout = layout;
  m.horizon = T;
  m.dt = dt;
  m.D = Eigen::MatrixXd::Zero(T, layout.dim());
  m.F = Eigen::MatrixXd::Zero(T, layout.dim());
  m.g.resize(T);
  m.h.resize(T);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < nx; ++k) {
      m.D(t, layout.index(t, k)) = -layout.vars[k].p_inj;
      m.F(t, layout.index(t, k)) = -layout.vars[k].q_inj;
    }
    m.g[t] = load_p.at(t);
    m.h[t] = load_q.at(t);
  }
  append_blocks(m, blocks);
  return m;
}

Eigen::VectorXd midpoint_operating_point(const der::Fleet& fleet, const VariableLayout& layout,
                                         int t) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.nx());
  for (int k = 0; k < layout.nx(); ++k) {
    const LayoutVar& v = layout.vars[k];
    const der::Device& d = fleet.devices.at(v.device);
    switch (d.kind) {
      case der::DeviceKind::PV:
        if (v.role == VarRole::P) x[k] = 0.5 * (d.pv.p_min.at(t) + d.pv.p_max.at(t));
        break;
      case der::DeviceKind::ES:
        if (v.role == VarRole::P) x[k] = 0.5 * (d.es.p_min.at(t) + d.es.p_max.at(t));
        if (v.role == VarRole::PDis) x[k] = 0.5 * std::max(d.es.p_max.at(t), 0.0);
        if (v.role == VarRole::PCha) x[k] = 0.5 * std::max(-d.es.p_min.at(t), 0.0);
        break;
      case der::DeviceKind::DCL:
        x[k] = 0.5 * (d.dcl.p_min.at(t) + d.dcl.p_max.at(t));
        if (v.role == VarRole::Q) x[k] *= d.dcl.eta;
        break;
      case der::DeviceKind::HVAC:
        x[k] = 0.5 * d.hvac.p_max.at(t);
        if (v.role == VarRole::Q) x[k] *= d.hvac.eta;
        break;
    }
  }
  return x;
}

namespace {

std::vector<der::ConstraintBlock> fleet_blocks(const der::Fleet& fleet, const VariableLayout& layout,
                                               double dt, const der::BlockOptions& opt) {
  std::vector<der::ConstraintBlock> blocks;
  for (int d = 0; d < static_cast<int>(fleet.devices.size()); ++d) {
    blocks.push_back(der::device_block(fleet.devices[d], d, layout, dt, opt));
  }
  return blocks;
}

// Capability circles of PV and ES terminals, one per period.
std::vector<Conic> fleet_conics(const der::Fleet& fleet, const VariableLayout& layout) {
  std::vector<Conic> out;
  for (int d = 0; d < static_cast<int>(fleet.devices.size()); ++d) {
    const der::Device& dev = fleet.devices[d];
    if (dev.kind != der::DeviceKind::PV && dev.kind != der::DeviceKind::ES) continue;
    const Series& s = dev.kind == der::DeviceKind::PV ? dev.pv.s_max : dev.es.s_max;
    for (int t = 0; t < layout.horizon; ++t) {
      for (int slot = 0; slot < static_cast<int>(dev.phases.size()); ++slot) {
        Conic c;
        c.device = dev.id;
        c.period = t;
        c.radius = s.at(t);
        for (VarRole role : {VarRole::P, VarRole::PDis, VarRole::PCha}) {
          const int k = layout.find(d, slot, role);
          if (k < 0) continue;
          c.p_idx.push_back(layout.index(t, k));
          c.p_val.push_back(role == VarRole::PCha ? -1.0 : 1.0);
        }
        c.q_idx.push_back(layout.index(t, layout.find(d, slot, VarRole::Q)));
        c.q_val.push_back(1.0);
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

}  // namespace

CompactModel build_model(const pf::Grid& grid, const der::Fleet& fleet, int horizon, double dt,
                         const BuildOptions& opt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be positive");
  const VariableLayout layout = der::make_layout(fleet, horizon);
  for (const auto& d : fleet.devices) der::check_params(d, horizon, dt);
  const Eigen::VectorXd x_op =
      opt.x_op ? *opt.x_op : midpoint_operating_point(fleet, layout, opt.t_ref);
  const pf::LinearPFModel lin = pf::linearize(grid, layout, x_op, opt.t_ref, opt.pf);
  if (!opt.blocks.polygonize && opt.assemble.lp_only) {
    throw Error(ErrorCode::ConicPresent, "LP-only assembly requested without polygonization");
  }
  CompactModel m = assemble(lin, network_limits(grid), layout,
                            fleet_blocks(fleet, layout, dt, opt.blocks), dt, opt.assemble);
  m.fleet = fleet;
  if (!opt.blocks.polygonize) m.conics = fleet_conics(fleet, layout);
  return m;
}

CompactModel build_copper_plate(const der::Fleet& fleet, int horizon, double dt,
                                const der::BlockOptions& blocks, const Series& load_p,
                                const Series& load_q) {
  const VariableLayout layout = der::make_layout(fleet, horizon);
  for (const auto& d : fleet.devices) der::check_params(d, horizon, dt);
  CompactModel m = assemble_copper_plate(layout, fleet_blocks(fleet, layout, dt, blocks), dt,
                                         load_p, load_q);
  m.fleet = fleet;
  if (!blocks.polygonize) m.conics = fleet_conics(fleet, layout);
  return m;
}

void append_rows(lp::LpProblem& lp, const CompactModel& model, int offset) {
  std::vector<int> idx;
  for (const auto& r : model.rows) {
    idx.resize(r.idx.size());
    for (std::size_t k = 0; k < r.idx.size(); ++k) idx[k] = r.idx[k] + offset;
    lp.add_le(idx, r.val, r.rhs);
  }
}

namespace {

lp::LpProblem subset_lp(const CompactModel& model, const std::vector<int>& subset) {
  lp::LpProblem lp;
  for (int j = 0; j < model.dim(); ++j) lp.add_variable(0.0, -lp::kInf, lp::kInf);
  for (int i : subset) lp.add_le(model.rows[i].idx, model.rows[i].val, model.rows[i].rhs);
  return lp;
}

}  // namespace

ProbeResult feasibility_probe(const CompactModel& model, const lp::LpOptions& opt) {
  std::vector<int> all(model.num_rows());
  for (int i = 0; i < model.num_rows(); ++i) all[i] = i;
  ProbeResult res;
  const lp::Solution sol = lp::solve_lp(subset_lp(model, all), opt);
  if (sol.status == lp::Status::Optimal) {
    res.feasible = true;
    res.x = sol.primal;
    return res;
  }
  if (sol.status != lp::Status::Infeasible) {
    throw Error(ErrorCode::NumericalFailure,
                std::string("feasibility probe LP ended with status ") + lp::to_string(sol.status));
  }
  // Deletion filter: drop each row whose removal keeps the set infeasible.
  std::vector<int> keep = all;
  for (std::size_t pos = 0; pos < keep.size();) {
    std::vector<int> trial = keep;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(pos));
    if (lp::solve_lp(subset_lp(model, trial), opt).status == lp::Status::Infeasible) {
      keep = std::move(trial);
    } else {
      ++pos;
    }
  }
  res.conflict = std::move(keep);
  return res;
}

void write_model_mps(std::ostream& out, const CompactModel& model, const std::vector<double>& cost) {
  if (!cost.empty() && static_cast<int>(cost.size()) != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "cost length does not match dim(x)");
  }
  lp::MilpProblem p;
  for (int j = 0; j < model.dim(); ++j) {
    p.lp.add_variable(cost.empty() ? 0.0 : cost[j], -lp::kInf, lp::kInf);
  }
  append_rows(p.lp, model, 0);
  std::ostringstream body;
  lp::write_mps(body, p);
  std::string text = body.str();
  std::string cones;
  for (const auto& c : model.conics) {
    cones += "* CONE " + c.device + " " + std::to_string(c.period) + " " + lp::mps_number(c.radius) +
             "\n";
  }
  const auto end = text.rfind("ENDATA");
  text.insert(end == std::string::npos ? text.size() : end, cones);
  out << text;
}

}  // namespace flexagg::compact
