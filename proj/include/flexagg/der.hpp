#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "flexagg/layout.hpp"

namespace flexagg::der {

using flexagg::Series;

enum class DeviceKind { PV, ES, DCL, HVAC };

const char* to_string(DeviceKind k);

struct PvParams {
  Series p_max, p_min{0.0}, s_max;
};

struct EsParams {
  Series p_max, p_min, s_max;
  double e_max = 0.0, e_min = 0.0, e0 = 0.0;
  double kappa = 1.0;
  bool realistic = false;
  double nu_cha = 1.0, nu_dis = 1.0;
  double penalty = 1e-3;
};

struct DclParams {
  Series p_max, p_min{0.0};
  double eta = 0.0;
  double e_max = 0.0, e_min = 0.0;
};

struct HvacParams {
  Series p_max;
  double eta = 0.0;
  double alpha = 0.5, beta = 1.0;
  double f_max = 0.0, f_min = 0.0;
  Series f_out;
  double f0 = 0.0;
  double f_comfort = 0.0;
};

/// A device and the terminals it connects to. Per-phase limits apply to each
/// connected phase; energy and temperature states use the phase sum.
struct Device {
  std::string id;
  DeviceKind kind = DeviceKind::PV;
  std::string bus;
  Connection connection = Connection::Wye;
  std::vector<int> phases;
  PvParams pv;
  EsParams es;
  DclParams dcl;
  HvacParams hvac;
};

struct Fleet {
  std::vector<Device> devices;
};

/// Variables per terminal: PV, DCL and HVAC have (p, q); ES has (p, q) or
/// (p_dis, p_cha, q) in realistic mode. PV and ES count as generation
/// (positive injection), DCL and HVAC as consumption.
VariableLayout make_layout(const Fleet& fleet, int horizon);

/// Halfspace a p + b q <= c.
struct Halfspace {
  double a = 0.0, b = 0.0, c = 0.0;
};

enum class PolygonMode { Inscribed, Circumscribed };

/// n_sides halfspaces with outward normals at angles 2 pi k / n, k = 0..n-1,
/// scaled to unit infinity-norm. Circumscribed facets touch the circle;
/// inscribed facets are pulled in so the vertices lie on it.
std::vector<Halfspace> polygonize_circle(double radius, int n_sides, PolygonMode mode);

struct Provenance {
  std::string device;
  std::string tag;
  int period = -1;  // -1 for rows spanning the horizon
};

/// Sparse row idx.val <= rhs over the full x.
struct Row {
  std::vector<int> idx;
  std::vector<double> val;
  double rhs = 0.0;
  Provenance prov;
};

struct ConstraintBlock {
  std::vector<Row> rows;
  /// Linear objective contributions (column, coefficient), minimization.
  std::vector<std::pair<int, double>> objective;
};

struct BlockOptions {
  int polygon_sides = 8;
  /// Keep the device circles exact instead of polygonizing. Such blocks
  /// carry no capability rows; the caller records them as conic terms.
  bool polygonize = true;
};

ConstraintBlock pv_block(const Device& d, int device, const VariableLayout& layout,
                         const BlockOptions& opt = {});
ConstraintBlock es_block(const Device& d, int device, const VariableLayout& layout, double dt,
                         const BlockOptions& opt = {});
ConstraintBlock es_block_realistic(const Device& d, int device, const VariableLayout& layout,
                                   double dt, const BlockOptions& opt = {});
ConstraintBlock dcl_block(const Device& d, int device, const VariableLayout& layout, double dt,
                          const BlockOptions& opt = {});
ConstraintBlock hvac_block(const Device& d, int device, const VariableLayout& layout, double dt,
                           const BlockOptions& opt = {});

/// Dispatches on the device kind (and ES mode).
ConstraintBlock device_block(const Device& d, int device, const VariableLayout& layout,
                             double dt, const BlockOptions& opt = {});

/// Throws InfeasibleParams when a device cannot satisfy its own model.
void check_params(const Device& d, int horizon, double dt);

/// Forward-simulated states for a dispatch x (full horizon).
std::vector<double> simulate_soc(const Device& d, int device, const VariableLayout& layout,
                                 const std::vector<double>& x, double dt);
std::vector<double> simulate_temperature(const Device& d, int device,
                                         const VariableLayout& layout,
                                         const std::vector<double>& x, double dt);

/// Phase-summed active power of a device in period t (p_dis - p_cha for
/// realistic ES).
double device_power(int device, const VariableLayout& layout, const std::vector<double>& x,
                    int t);

}  // namespace flexagg::der
