#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flexagg/der.hpp"
#include "flexagg/lp.hpp"
#include "flexagg/pf.hpp"

namespace flexagg::compact {

/// ||(e_p . x, e_q . x)|| <= radius, kept when device circles are not
/// polygonized. Never solved in-repo.
struct Conic {
  std::string device;
  int period = 0;
  std::vector<int> p_idx, q_idx;
  std::vector<double> p_val, q_val;
  double radius = 0.0;
};

/// Aggregate model over x = [x_1; ...; x_T]:
///
///   p0 = D x + g,  q0 = F x + h,  W x <= w  (rows normalized to unit inf-norm)
struct CompactModel {
  VariableLayout layout;
  der::Fleet fleet;
  int horizon = 1;
  double dt = 1.0;
  Eigen::MatrixXd D, F;  // T x dim
  Eigen::VectorXd g, h;  // T
  std::vector<der::Row> rows;
  /// Linear objective terms contributed by the blocks (realistic ES penalty).
  std::vector<std::pair<int, double>> objective;
  std::vector<Conic> conics;
  bool has_network = false;

  int dim() const { return layout.dim(); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  bool conic() const { return !conics.empty(); }
  /// Throws ConicPresent for models that carry conic rows.
  void require_polyhedral() const;

  Eigen::MatrixXd W() const;
  Eigen::VectorXd w() const;
  /// Largest violation of W x <= w.
  double max_violation(const std::vector<double>& x) const;
};

struct NetworkLimits {
  double v_min = 0.95, v_max = 1.05;
  double i_min = 0.0;
  std::vector<double> i_max;  // per line phase, inf for none
};

NetworkLimits network_limits(const pf::Grid& grid);

struct AssembleOptions {
  bool voltage_limits = true;
  bool current_limits = true;
  /// Refuse conic terms (ConicPresent).
  bool lp_only = true;
};

/// Network rows per period t: v_min <= A x_t + a_t <= v_max and
/// i_min <= B x_t + b_t <= i_max (lower current rows only when i_min > 0),
/// followed by the block rows. Every row is scaled to unit inf-norm.
CompactModel assemble(const pf::LinearPFModel& lin, const NetworkLimits& limits,
                      const VariableLayout& layout, const std::vector<der::ConstraintBlock>& blocks,
                      double dt, const AssembleOptions& opt = {});

/// Lossless single-node aggregation: p0 = load_p - sum of device active
/// injections, likewise for q0. No network rows.
CompactModel assemble_copper_plate(const VariableLayout& layout,
                                   const std::vector<der::ConstraintBlock>& blocks, double dt,
                                   const Series& load_p = Series(0.0),
                                   const Series& load_q = Series(0.0));

/// Device power variables at the middle of their bounds for period t.
Eigen::VectorXd midpoint_operating_point(const der::Fleet& fleet, const VariableLayout& layout,
                                         int t);

struct BuildOptions {
  der::BlockOptions blocks;
  AssembleOptions assemble;
  /// Linearization point; the box midpoint at t_ref when empty.
  std::optional<Eigen::VectorXd> x_op;
  int t_ref = 0;
  pf::PfOptions pf;
};

/// Layout, device blocks, linearization and assembly in one call.
CompactModel build_model(const pf::Grid& grid, const der::Fleet& fleet, int horizon, double dt,
                         const BuildOptions& opt = {});

CompactModel build_copper_plate(const der::Fleet& fleet, int horizon, double dt,
                                const der::BlockOptions& blocks = {},
                                const Series& load_p = Series(0.0),
                                const Series& load_q = Series(0.0));

/// Adds copies of the W rows over columns [offset, offset + dim).
void append_rows(lp::LpProblem& lp, const CompactModel& model, int offset);

struct ProbeResult {
  bool feasible = false;
  std::vector<double> x;
  /// Irreducible infeasible row subset (row indices) when infeasible.
  std::vector<int> conflict;
};

/// One zero-objective LP over W x <= w. On infeasibility a deletion filter
/// shrinks the row set to an irreducible conflict.
ProbeResult feasibility_probe(const CompactModel& model, const lp::LpOptions& opt = {});

/// Writes the rows W x <= w as MPS with the given objective (zero when
/// empty). Conic terms are appended as comment lines before ENDATA:
/// "* CONE <device> <period> <radius>".
void write_model_mps(std::ostream& out, const CompactModel& model,
                     const std::vector<double>& cost = {});

}  // namespace flexagg::compact
