#pragma once
// Hand-built copper-plate models with one (p, q) pair per period.

#include <string>
#include <vector>

#include "flexagg/compact.hpp"

namespace toy {

inline flexagg::der::Device pv_device(const std::string& id, double p_max, double s_max) {
  flexagg::der::Device d;
  d.id = id;
  d.kind = flexagg::der::DeviceKind::PV;
  d.bus = "x";
  d.phases = {0};
  d.pv.p_max = flexagg::Series(p_max);
  d.pv.s_max = flexagg::Series(s_max);
  return d;
}

inline flexagg::der::Device es_device(const std::string& id, double p, double e_max, double e0) {
  flexagg::der::Device d;
  d.id = id;
  d.kind = flexagg::der::DeviceKind::ES;
  d.bus = "x";
  d.phases = {0};
  d.es.p_max = flexagg::Series(p);
  d.es.p_min = flexagg::Series(-p);
  d.es.s_max = flexagg::Series(4.0 * p);
  d.es.e_max = e_max;
  d.es.e0 = e0;
  return d;
}

/// One generator-like variable pair (p, q) per period so p0 = load - p and
/// q0 = -q, with |p| <= p_bound, |q| <= q_bound and, when ramp > 0,
/// |p_t - p_{t-1}| <= ramp.
inline flexagg::compact::CompactModel box_model(int T, double p_bound, double q_bound,
                                                double ramp = 0.0, double load = 0.0) {
  using namespace flexagg;
  der::Fleet fleet;
  fleet.devices = {pv_device("box", 1.0, 2.0)};
  const VariableLayout layout = der::make_layout(fleet, T);
  der::ConstraintBlock blk;
  for (int t = 0; t < T; ++t) {
    const int p = layout.index(t, 0);
    const int q = layout.index(t, 1);
    blk.rows.push_back({{p}, {1.0}, p_bound, {"box", "p", t}});
    blk.rows.push_back({{p}, {-1.0}, p_bound, {"box", "p", t}});
    blk.rows.push_back({{q}, {1.0}, q_bound, {"box", "q", t}});
    blk.rows.push_back({{q}, {-1.0}, q_bound, {"box", "q", t}});
    if (ramp > 0.0 && t > 0) {
      const int prev = layout.index(t - 1, 0);
      blk.rows.push_back({{p, prev}, {1.0, -1.0}, ramp, {"box", "ramp", t}});
      blk.rows.push_back({{p, prev}, {-1.0, 1.0}, ramp, {"box", "ramp", t}});
    }
  }
  return compact::assemble_copper_plate(layout, {blk}, 1.0, Series(load));
}

}  // namespace toy
