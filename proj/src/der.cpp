#include "flexagg/der.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "flexagg/error.hpp"

namespace flexagg {

const char* to_string(VarRole r) {
  switch (r) {
    case VarRole::P: return "p";
    case VarRole::Q: return "q";
    case VarRole::PDis: return "p_dis";
    case VarRole::PCha: return "p_cha";
  }
  return "?";
}

int VariableLayout::find(int device, int slot, VarRole role) const {
  const int first = device_first.at(device);
  for (int k = first; k < first + device_count.at(device); ++k) {
    if (vars[k].role == role && vars[k].terminal - vars[first].terminal == slot) return k;
  }
  return -1;
}

namespace der {

const char* to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::PV: return "pv";
    case DeviceKind::ES: return "es";
    case DeviceKind::DCL: return "dcl";
    case DeviceKind::HVAC: return "hvac";
  }
  return "?";
}

VariableLayout make_layout(const Fleet& fleet, int horizon) {
  if (horizon < 1) throw Error(ErrorCode::ConfigError, "horizon must be at least 1");
  VariableLayout lay;
  lay.horizon = horizon;
  for (int d = 0; d < static_cast<int>(fleet.devices.size()); ++d) {
    const Device& dev = fleet.devices[d];
    lay.device_ids.push_back(dev.id);
    lay.device_first.push_back(lay.nx());
    for (int phase : dev.phases) {
      const int term = static_cast<int>(lay.terminals.size());
      lay.terminals.push_back({dev.bus, dev.connection, phase});
      auto add = [&](VarRole role, double p, double q) {
        lay.vars.push_back({d, term, role, p, q});
      };
      switch (dev.kind) {
        case DeviceKind::PV:
          add(VarRole::P, 1.0, 0.0);
          add(VarRole::Q, 0.0, 1.0);
          break;
        case DeviceKind::ES:
          if (dev.es.realistic) {
            add(VarRole::PDis, 1.0, 0.0);
            add(VarRole::PCha, -1.0, 0.0);
          } else {
            add(VarRole::P, 1.0, 0.0);
          }
          add(VarRole::Q, 0.0, 1.0);
          break;
        case DeviceKind::DCL:
        case DeviceKind::HVAC:
          add(VarRole::P, -1.0, 0.0);
          add(VarRole::Q, 0.0, -1.0);
          break;
      }
    }
    lay.device_count.push_back(lay.nx() - lay.device_first.back());
  }
  return lay;
}

std::vector<Halfspace> polygonize_circle(double radius, int n_sides, PolygonMode mode) {
  if (n_sides < 4 || n_sides % 2 != 0) {
    throw Error(ErrorCode::BadArity, "polygon needs an even number of sides >= 4");
  }
  if (radius < 0.0) throw Error(ErrorCode::InfeasibleParams, "negative circle radius");
  const double reach =
      mode == PolygonMode::Circumscribed ? radius : radius * std::cos(std::numbers::pi / n_sides);
  std::vector<Halfspace> out;
  out.reserve(n_sides);
  for (int k = 0; k < n_sides; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n_sides;
    double a = std::cos(th);
    double b = std::sin(th);
    if (std::abs(a) < 1e-15) a = 0.0;
    if (std::abs(b) < 1e-15) b = 0.0;
    const double s = std::max(std::abs(a), std::abs(b));
    out.push_back({a / s, b / s, reach / s});
  }
  return out;
}

namespace {

void add_row(ConstraintBlock& blk, const std::vector<int>& idx, const std::vector<double>& val,
             double rhs, Provenance prov) {
  std::vector<int> i2;
  std::vector<double> v2;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (val[k] == 0.0) continue;
    i2.push_back(idx[k]);
    v2.push_back(val[k]);
  }
  if (i2.empty()) {
    if (rhs < -1e-12) {
      throw Error(ErrorCode::InfeasibleParams,
                  prov.device + ": constant row " + prov.tag + " cannot hold");
    }
    return;
  }
  blk.rows.push_back({std::move(i2), std::move(v2), rhs, std::move(prov)});
}

// lo <= idx.val <= hi as up to two rows.
void add_range(ConstraintBlock& blk, const std::vector<int>& idx, const std::vector<double>& val,
               double lo, double hi, const Provenance& prov) {
  if (std::isfinite(hi)) add_row(blk, idx, val, hi, prov);
  if (std::isfinite(lo)) {
    std::vector<double> neg(val);
    for (auto& v : neg) v = -v;
    add_row(blk, idx, neg, -lo, prov);
  }
}

int col(const VariableLayout& lay, int t, int k) { return lay.index(t, k); }

int slots(const Device& d) { return static_cast<int>(d.phases.size()); }

void capability_rows(ConstraintBlock& blk, const Device& d, const VariableLayout& lay,
                     int device, int t, double s_max, const BlockOptions& opt) {
  if (!opt.polygonize) return;
  const auto poly = polygonize_circle(s_max, opt.polygon_sides, PolygonMode::Inscribed);
  const std::string tag = std::string(to_string(d.kind)) + ".capability";
  for (int s = 0; s < slots(d); ++s) {
    const int q = lay.find(device, s, VarRole::Q);
    std::vector<int> idx;
    std::vector<double> pc;
    const int p = lay.find(device, s, VarRole::P);
    if (p >= 0) {
      idx.push_back(col(lay, t, p));
      pc.push_back(1.0);
    } else {
      idx.push_back(col(lay, t, lay.find(device, s, VarRole::PDis)));
      pc.push_back(1.0);
      idx.push_back(col(lay, t, lay.find(device, s, VarRole::PCha)));
      pc.push_back(-1.0);
    }
    idx.push_back(col(lay, t, q));
    for (const auto& h : poly) {
      std::vector<double> val;
      for (double c : pc) val.push_back(h.a * c);
      val.push_back(h.b);
      add_row(blk, idx, val, h.c, {d.id, tag, t});
    }
  }
}

// q = eta p for every terminal in period t.
void power_factor_rows(ConstraintBlock& blk, const Device& d, const VariableLayout& lay,
                       int device, int t, double eta) {
  const std::string tag = std::string(to_string(d.kind)) + ".power_factor";
  for (int s = 0; s < slots(d); ++s) {
    const std::vector<int> idx{col(lay, t, lay.find(device, s, VarRole::Q)),
                               col(lay, t, lay.find(device, s, VarRole::P))};
    add_range(blk, idx, {1.0, -eta}, 0.0, 0.0, {d.id, tag, t});
  }
}

void power_rows(ConstraintBlock& blk, const Device& d, const VariableLayout& lay, int device,
                int t, double lo, double hi) {
  const std::string tag = std::string(to_string(d.kind)) + ".power";
  for (int s = 0; s < slots(d); ++s) {
    const int p = lay.find(device, s, VarRole::P);
    if (p >= 0) {
      add_range(blk, {col(lay, t, p)}, {1.0}, lo, hi, {d.id, tag, t});
      continue;
    }
    const int pd = col(lay, t, lay.find(device, s, VarRole::PDis));
    const int pc = col(lay, t, lay.find(device, s, VarRole::PCha));
    add_range(blk, {pd, pc}, {1.0, -1.0}, lo, hi, {d.id, tag, t});
    add_range(blk, {pd}, {1.0}, 0.0, std::max(hi, 0.0), {d.id, tag, t});
    add_range(blk, {pc}, {1.0}, 0.0, std::max(-lo, 0.0), {d.id, tag, t});
  }
}

void require_kind(const Device& d, DeviceKind k) {
  if (d.kind != k) {
    throw Error(ErrorCode::InconsistentLayout, d.id + " is not a " + to_string(k) + " device");
  }
}

void check_layout(const Device& d, int device, const VariableLayout& lay) {
  if (device < 0 || device >= static_cast<int>(lay.device_first.size()) ||
      lay.device_ids[device] != d.id) {
    throw Error(ErrorCode::InconsistentLayout, "layout does not cover device " + d.id);
  }
}

// SOC rows shared by both ES modes. `energy` lists (per-period column,
// coefficient) pairs whose sum times dt is the energy drawn in a period.
void soc_rows(ConstraintBlock& blk, const Device& d, const VariableLayout& lay,
              const std::vector<std::pair<int, double>>& energy, double dt) {
  const EsParams& es = d.es;
  const int T = lay.horizon;
  auto partial = [&](int t, std::vector<int>& idx, std::vector<double>& val) {
    for (int tau = 0; tau <= t; ++tau) {
      const double w = dt * std::pow(es.kappa, t - tau);
      for (const auto& [k, c] : energy) {
        idx.push_back(col(lay, tau, k));
        val.push_back(w * c);
      }
    }
  };
  for (int t = 0; t < T; ++t) {
    std::vector<int> idx;
    std::vector<double> val;
    partial(t, idx, val);
    const double decay = std::pow(es.kappa, t + 1) * es.e0;
    add_range(blk, idx, val, decay - es.e_max, decay - es.e_min, {d.id, "es.soc", t});
  }
  std::vector<int> idx;
  std::vector<double> val;
  partial(T - 1, idx, val);
  const double target = std::pow(es.kappa, T) * es.e0 - es.e0;
  add_range(blk, idx, val, target, target, {d.id, "es.terminal", -1});
}

}  // namespace

void check_params(const Device& d, int horizon, double dt) {
  auto bad = [&](const std::string& what) {
    throw Error(ErrorCode::InfeasibleParams, d.id + ": " + what);
  };
  if (d.phases.empty()) bad("no connected phases");
  std::set<int> seen;
  for (int p : d.phases) {
    if (p < 0 || p > 2 || !seen.insert(p).second) bad("bad phase list");
  }
  if (!(dt > 0.0)) bad("time step must be positive");
  const double nph = static_cast<double>(d.phases.size());
  auto fits = [&](const Series& s, const char* name) {
    if (!s.fits(horizon) || s.values.empty()) {
      bad(std::string(name) + " needs 1 or at least " + std::to_string(horizon) + " entries");
    }
  };
  switch (d.kind) {
    case DeviceKind::PV: {
      fits(d.pv.p_max, "p_max");
      fits(d.pv.p_min, "p_min");
      fits(d.pv.s_max, "s_max");
      for (int t = 0; t < horizon; ++t) {
        if (d.pv.s_max.at(t) < 0.0) bad("negative s_max");
        if (d.pv.p_min.at(t) > d.pv.p_max.at(t) || d.pv.p_max.at(t) > d.pv.s_max.at(t)) {
          bad("need p_min <= p_max <= s_max");
        }
      }
      break;
    }
    case DeviceKind::ES: {
      const EsParams& es = d.es;
      fits(es.p_max, "p_max");
      fits(es.p_min, "p_min");
      fits(es.s_max, "s_max");
      if (!(es.kappa > 0.0 && es.kappa <= 1.0)) bad("kappa must lie in (0,1]");
      if (!(es.e_min <= es.e0 && es.e0 <= es.e_max)) bad("need e_min <= e0 <= e_max");
      if (es.realistic && !(es.nu_cha > 0.0 && es.nu_cha <= 1.0 && es.nu_dis > 0.0 &&
                            es.nu_dis <= 1.0)) {
        bad("efficiencies must lie in (0,1]");
      }
      // Terminal energy balance within the power box.
      double lo = 0.0, hi = 0.0;
      for (int t = 0; t < horizon; ++t) {
        if (es.p_min.at(t) > es.p_max.at(t)) bad("p_min > p_max");
        if (es.s_max.at(t) < 0.0) bad("negative s_max");
        const double w = dt * std::pow(es.kappa, horizon - 1 - t) * nph;
        double pl = es.p_min.at(t), ph = es.p_max.at(t);
        if (es.realistic) {
          pl = std::min(pl, 0.0) * es.nu_cha;
          ph = std::max(ph, 0.0) / es.nu_dis;
        }
        lo += w * pl;
        hi += w * ph;
      }
      const double target = std::pow(es.kappa, horizon) * es.e0 - es.e0;
      if (target < lo - 1e-9 || target > hi + 1e-9) bad("terminal state of charge unreachable");
      break;
    }
    case DeviceKind::DCL: {
      const DclParams& c = d.dcl;
      fits(c.p_max, "p_max");
      fits(c.p_min, "p_min");
      if (c.e_min > c.e_max) bad("need e_min <= e_max");
      double lo = 0.0, hi = 0.0;
      for (int t = 0; t < horizon; ++t) {
        if (c.p_min.at(t) > c.p_max.at(t)) bad("p_min > p_max");
        lo += c.p_min.at(t) * dt * nph;
        hi += c.p_max.at(t) * dt * nph;
      }
      if (lo > c.e_max + 1e-9 || hi < c.e_min - 1e-9) bad("energy band unreachable");
      break;
    }
    case DeviceKind::HVAC: {
      const HvacParams& h = d.hvac;
      fits(h.p_max, "p_max");
      fits(h.f_out, "f_out");
      if (!(h.alpha > 0.0 && h.alpha < 1.0)) bad("alpha must lie in (0,1)");
      if (!(h.f_min <= h.f0 && h.f0 <= h.f_max)) bad("need f_min <= f0 <= f_max");
      for (int t = 0; t < horizon; ++t) {
        if (h.p_max.at(t) < 0.0) bad("negative p_max");
      }
      break;
    }
  }
}

ConstraintBlock pv_block(const Device& d, int device, const VariableLayout& lay,
                         const BlockOptions& opt) {
  require_kind(d, DeviceKind::PV);
  check_layout(d, device, lay);
  ConstraintBlock blk;
  for (int t = 0; t < lay.horizon; ++t) {
    power_rows(blk, d, lay, device, t, d.pv.p_min.at(t), d.pv.p_max.at(t));
    capability_rows(blk, d, lay, device, t, d.pv.s_max.at(t), opt);
  }
  return blk;
}

ConstraintBlock es_block(const Device& d, int device, const VariableLayout& lay, double dt,
                         const BlockOptions& opt) {
  require_kind(d, DeviceKind::ES);
  check_layout(d, device, lay);
  if (d.es.realistic) return es_block_realistic(d, device, lay, dt, opt);
  ConstraintBlock blk;
  for (int t = 0; t < lay.horizon; ++t) {
    power_rows(blk, d, lay, device, t, d.es.p_min.at(t), d.es.p_max.at(t));
    capability_rows(blk, d, lay, device, t, d.es.s_max.at(t), opt);
  }
  std::vector<std::pair<int, double>> energy;
  for (int s = 0; s < slots(d); ++s) energy.emplace_back(lay.find(device, s, VarRole::P), 1.0);
  soc_rows(blk, d, lay, energy, dt);
  return blk;
}

ConstraintBlock es_block_realistic(const Device& d, int device, const VariableLayout& lay,
                                   double dt, const BlockOptions& opt) {
  require_kind(d, DeviceKind::ES);
  check_layout(d, device, lay);
  if (!d.es.realistic) {
    throw Error(ErrorCode::InconsistentLayout, d.id + " is not in realistic mode");
  }
  ConstraintBlock blk;
  for (int t = 0; t < lay.horizon; ++t) {
    power_rows(blk, d, lay, device, t, d.es.p_min.at(t), d.es.p_max.at(t));
    capability_rows(blk, d, lay, device, t, d.es.s_max.at(t), opt);
  }
  std::vector<std::pair<int, double>> energy;
  for (int s = 0; s < slots(d); ++s) {
    energy.emplace_back(lay.find(device, s, VarRole::PDis), 1.0 / d.es.nu_dis);
    energy.emplace_back(lay.find(device, s, VarRole::PCha), -d.es.nu_cha);
  }
  soc_rows(blk, d, lay, energy, dt);
  if (d.es.penalty != 0.0) {
    for (int t = 0; t < lay.horizon; ++t) {
      for (int s = 0; s < slots(d); ++s) {
        blk.objective.emplace_back(col(lay, t, lay.find(device, s, VarRole::PDis)),
                                   d.es.penalty * dt);
        blk.objective.emplace_back(col(lay, t, lay.find(device, s, VarRole::PCha)),
                                   d.es.penalty * dt);
      }
    }
  }
  return blk;
}

ConstraintBlock dcl_block(const Device& d, int device, const VariableLayout& lay, double dt,
                          const BlockOptions&) {
  require_kind(d, DeviceKind::DCL);
  check_layout(d, device, lay);
  ConstraintBlock blk;
  std::vector<int> idx;
  std::vector<double> val;
  for (int t = 0; t < lay.horizon; ++t) {
    power_rows(blk, d, lay, device, t, d.dcl.p_min.at(t), d.dcl.p_max.at(t));
    power_factor_rows(blk, d, lay, device, t, d.dcl.eta);
    for (int s = 0; s < slots(d); ++s) {
      idx.push_back(col(lay, t, lay.find(device, s, VarRole::P)));
      val.push_back(dt);
    }
  }
  add_range(blk, idx, val, d.dcl.e_min, d.dcl.e_max, {d.id, "dcl.energy", -1});
  return blk;
}

ConstraintBlock hvac_block(const Device& d, int device, const VariableLayout& lay, double dt,
                           const BlockOptions&) {
  require_kind(d, DeviceKind::HVAC);
  check_layout(d, device, lay);
  const HvacParams& h = d.hvac;
  const double keep = 1.0 - h.alpha;
  ConstraintBlock blk;
  double base = h.f0;
  for (int t = 0; t < lay.horizon; ++t) {
    power_rows(blk, d, lay, device, t, 0.0, h.p_max.at(t));
    power_factor_rows(blk, d, lay, device, t, h.eta);
    base = keep * base + h.alpha * h.f_out.at(t);
    std::vector<int> idx;
    std::vector<double> val;
    for (int tau = 0; tau <= t; ++tau) {
      const double w = dt * h.beta * std::pow(keep, t - tau);
      for (int s = 0; s < slots(d); ++s) {
        idx.push_back(col(lay, tau, lay.find(device, s, VarRole::P)));
        val.push_back(w);
      }
    }
    add_range(blk, idx, val, h.f_min - base, h.f_max - base, {d.id, "hvac.comfort", t});
  }
  return blk;
}

ConstraintBlock device_block(const Device& d, int device, const VariableLayout& lay, double dt,
                             const BlockOptions& opt) {
  check_params(d, lay.horizon, dt);
  switch (d.kind) {
    case DeviceKind::PV: return pv_block(d, device, lay, opt);
    case DeviceKind::ES: return es_block(d, device, lay, dt, opt);
    case DeviceKind::DCL: return dcl_block(d, device, lay, dt, opt);
    case DeviceKind::HVAC: return hvac_block(d, device, lay, dt, opt);
  }
  throw Error(ErrorCode::InconsistentLayout, "unknown device kind");
}

double device_power(int device, const VariableLayout& lay, const std::vector<double>& x, int t) {
  double p = 0.0;
  const int first = lay.device_first.at(device);
  for (int k = first; k < first + lay.device_count.at(device); ++k) {
    const double v = x.at(lay.index(t, k));
    switch (lay.vars[k].role) {
      case VarRole::P:
      case VarRole::PDis: p += v; break;
      case VarRole::PCha: p -= v; break;
      case VarRole::Q: break;
    }
  }
  return p;
}

std::vector<double> simulate_soc(const Device& d, int device, const VariableLayout& lay,
                                 const std::vector<double>& x, double dt) {
  std::vector<double> e;
  double soc = d.es.e0;
  const int first = lay.device_first.at(device);
  for (int t = 0; t < lay.horizon; ++t) {
    double drawn = 0.0;
    for (int k = first; k < first + lay.device_count.at(device); ++k) {
      const double v = x.at(lay.index(t, k));
      switch (lay.vars[k].role) {
        case VarRole::P: drawn += v; break;
        case VarRole::PDis: drawn += v / d.es.nu_dis; break;
        case VarRole::PCha: drawn -= v * d.es.nu_cha; break;
        case VarRole::Q: break;
      }
    }
    soc = d.es.kappa * soc - dt * drawn;
    e.push_back(soc);
  }
  return e;
}

std::vector<double> simulate_temperature(const Device& d, int device,
                                         const VariableLayout& lay,
                                         const std::vector<double>& x, double dt) {
  const HvacParams& h = d.hvac;
  std::vector<double> f;
  double temp = h.f0;
  for (int t = 0; t < lay.horizon; ++t) {
    temp = temp + h.alpha * (h.f_out.at(t) - temp) + dt * h.beta * device_power(device, lay, x, t);
    f.push_back(temp);
  }
  return f;
}

}  // namespace der
}  // namespace flexagg
