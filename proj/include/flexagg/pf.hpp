#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "flexagg/layout.hpp"

namespace flexagg::pf {

using cplx = std::complex<double>;
using Block3 = std::array<std::array<cplx, 3>, 3>;

struct Bus {
  std::string id;
  std::vector<int> phases;  // subset of {0,1,2}
};

/// Series admittance (p.u.) between two buses. Only the phases present at
/// both ends are used.
struct Line {
  std::string from, to;
  Block3 y{};
  double i_max = std::numeric_limits<double>::infinity();  // p.u., per phase
};

/// A declared device attachment point (optional; when any are declared,
/// every layout terminal must match one).
struct DeviceConnection {
  std::string bus;
  Connection kind = Connection::Wye;
  std::vector<int> phases;
};

/// Uncontrollable consumption (MW / MVar, positive = drawn from the grid).
struct ExogenousLoad {
  std::string bus;
  Connection kind = Connection::Wye;
  int phase = 0;
  Series p{0.0}, q{0.0};
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::string substation;
  std::array<cplx, 3> v0{cplx(1, 0), std::polar(1.0, -2.0943951023931953),
                         std::polar(1.0, 2.0943951023931953)};
  double v_min = 0.95, v_max = 1.05;  // p.u.
  double i_min = 0.0;                 // p.u.
  double base_mva = 1.0;
  std::vector<DeviceConnection> connections;
  std::vector<ExogenousLoad> loads;
};

struct NodeId {
  std::string bus;
  int phase;
};

/// One current magnitude row: phase `phase` of line `line`.
struct LinePhase {
  int line;
  int phase;
};

/// Indexed form of a NetworkModel: non-substation nodes, delta pairs, and
/// the admittance blocks. Immutable once built.
class Grid {
 public:
  /// Validates the network (connectivity, symmetric blocks, limits) and
  /// factors Y_LL. Throws InconsistentLayout or SingularAdmittance.
  explicit Grid(NetworkModel net);

  const NetworkModel& net() const { return net_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_pairs() const { return static_cast<int>(pairs_.size()); }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<NodeId>& pairs() const { return pairs_; }
  const std::vector<LinePhase>& line_phases() const { return line_phases_; }

  /// -1 when absent.
  int node(const std::string& bus, int phase) const;
  int pair(const std::string& bus, int pair) const;
  bool is_substation(const std::string& bus) const { return bus == net_.substation; }

  const Eigen::MatrixXcd& y_ll() const { return y_ll_; }
  const Eigen::MatrixXcd& y_l0() const { return y_l0_; }
  const Eigen::MatrixXcd& y_0l() const { return y_0l_; }
  const Eigen::MatrixXcd& y_00() const { return y_00_; }
  const Eigen::VectorXcd& v0() const { return v0_; }
  /// Delta incidence: row per pair, +1 on the first phase, -1 on the second.
  const Eigen::MatrixXd& h() const { return h_; }

  Eigen::VectorXcd solve_y(const Eigen::VectorXcd& rhs) const { return lu_.solve(rhs); }
  /// No-load voltages m = -Y_LL^-1 Y_L0 v0.
  const Eigen::VectorXcd& m() const { return m_; }

  /// Complex line-phase currents (p.u.) for node voltages v.
  Eigen::VectorXcd currents(const Eigen::VectorXcd& v) const;
  /// Complex substation power (p.u.), positive when the feeder imports.
  cplx substation_power(const Eigen::VectorXcd& v) const;

 private:
  NetworkModel net_;
  std::vector<NodeId> nodes_, pairs_;
  std::vector<LinePhase> line_phases_;
  std::vector<int> sub_phases_;
  Eigen::MatrixXcd y_ll_, y_l0_, y_0l_, y_00_;
  Eigen::MatrixXcd current_map_;  // currents = current_map_ * [v_L; v0]
  Eigen::VectorXcd v0_, m_;
  Eigen::MatrixXd h_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

/// Complex injections in p.u.: per node (wye) and per delta pair.
struct Injections {
  Eigen::VectorXcd wye;
  Eigen::VectorXcd delta;
};

Injections zero_injections(const Grid& grid);

/// Adds the layout's controllable injections x_t (MW / MVar) to `inj`.
/// Throws InconsistentLayout for terminals the grid does not have.
void add_controllable(const Grid& grid, const VariableLayout& layout, const double* x_t,
                      Injections& inj);
/// Adds the exogenous loads of period t (as negative injections).
void add_exogenous(const Grid& grid, int t, Injections& inj);

struct PfOptions {
  double tolerance = 1e-10;
  int max_iters = 100;
};

struct PfResult {
  Eigen::VectorXcd v;
  int iterations = 0;
  double residual = 0.0;
};

/// Fixed-point load flow v = Y_LL^-1 (conj(s_Y / v) + H' conj(s_D / (H v))) + m.
PfResult solve_fixed_point_pf(const Grid& grid, const Injections& inj, const PfOptions& opt = {});

/// Infinity-norm fixed-point residual at v.
double fixed_point_residual(const Grid& grid, const Injections& inj, const Eigen::VectorXcd& v);

struct LinearPFModel {
  Eigen::MatrixXd A;  // node voltage magnitudes (p.u.) per MW / MVar
  Eigen::MatrixXd B;  // line-phase current magnitudes (p.u.)
  Eigen::VectorXd d, f;  // substation MW / MVar
  std::vector<Eigen::VectorXd> a, b;
  std::vector<double> g, h;
  // Linearization point.
  Eigen::VectorXcd v_op;
  Eigen::VectorXd x_op;
  int t_ref = 0;
  /// Complex voltage map used for every period: v~ = K x_t + k_t.
  Eigen::MatrixXcd K;
  std::vector<Eigen::VectorXcd> k;
};

struct LinearOutput {
  Eigen::VectorXd v, i;
  double p0 = 0.0, q0 = 0.0;
};

/// Linearizes at (v_op, x_op) with the exogenous loads of period t_ref.
/// v_op must solve the load flow for x_op plus those loads (residual 1e-8).
LinearPFModel build_linear_pf(const Grid& grid, const VariableLayout& layout,
                              const Eigen::VectorXcd& v_op, const Eigen::VectorXd& x_op,
                              int t_ref = 0);

/// Solves the load flow at x_op and linearizes there.
LinearPFModel linearize(const Grid& grid, const VariableLayout& layout,
                        const Eigen::VectorXd& x_op, int t_ref = 0, const PfOptions& opt = {});

LinearOutput evaluate_linear(const LinearPFModel& model, const Eigen::VectorXd& x_t, int t);

/// Nonlinear counterpart of evaluate_linear (same units), for validation.
LinearOutput evaluate_nonlinear(const Grid& grid, const VariableLayout& layout,
                                const Eigen::VectorXd& x_t, int t, const PfOptions& opt = {});

}  // namespace flexagg::pf
