#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace flexagg::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Solver tolerances, shared by the LP and MILP engines.
struct Tolerances {
  double feasibility = 1e-7;
  double optimality = 1e-7;
  double integrality = 1e-9;
  double pivot = 1e-9;
};

/// A linear program
///
///   minimize   c'y
///   subject to row_lo <= G y <= row_hi
///              col_lo <=   y <= col_hi
///
/// Single-sided rows use an infinite bound on the other side and equalities
/// use row_lo == row_hi. Rows are stored sparse, row by row.
class LpProblem {
 public:
  int add_variable(double cost, double lo, double hi, std::string name = {});

  int add_row(std::span<const int> index, std::span<const double> value, double lo, double hi,
              std::string name = {});
  int add_le(std::span<const int> index, std::span<const double> value, double rhs,
             std::string name = {}) {
    return add_row(index, value, -kInf, rhs, std::move(name));
  }
  int add_ge(std::span<const int> index, std::span<const double> value, double rhs,
             std::string name = {}) {
    return add_row(index, value, rhs, kInf, std::move(name));
  }
  int add_eq(std::span<const int> index, std::span<const double> value, double rhs,
             std::string name = {}) {
    return add_row(index, value, rhs, rhs, std::move(name));
  }

  int num_cols() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(row_lo_.size()); }

  std::vector<double>& cost() { return cost_; }
  const std::vector<double>& cost() const { return cost_; }
  std::vector<double>& col_lo() { return col_lo_; }
  const std::vector<double>& col_lo() const { return col_lo_; }
  std::vector<double>& col_hi() { return col_hi_; }
  const std::vector<double>& col_hi() const { return col_hi_; }
  const std::vector<double>& row_lo() const { return row_lo_; }
  const std::vector<double>& row_hi() const { return row_hi_; }
  std::vector<double>& row_lo() { return row_lo_; }
  std::vector<double>& row_hi() { return row_hi_; }
  const std::vector<std::string>& col_names() const { return col_names_; }
  const std::vector<std::string>& row_names() const { return row_names_; }

  /// Entries of row i live in [row_start()[i], row_start()[i+1]).
  const std::vector<int>& row_start() const { return row_start_; }
  const std::vector<int>& entry_col() const { return entry_col_; }
  const std::vector<double>& entry_val() const { return entry_val_; }

  /// Row activities G y.
  std::vector<double> activity(std::span<const double> y) const;

  /// Largest violation of row and column bounds at y.
  double max_violation(std::span<const double> y) const;

  /// Throws flexagg::Error(DimensionMismatch) on malformed data.
  void validate() const;

 private:
  std::vector<double> cost_, col_lo_, col_hi_;
  std::vector<std::string> col_names_;
  std::vector<double> row_lo_, row_hi_;
  std::vector<std::string> row_names_;
  std::vector<int> row_start_{0};
  std::vector<int> entry_col_;
  std::vector<double> entry_val_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterLimit, NodeLimit, NumericalFailure };

const char* to_string(Status s);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

/// Simplex basis. Rows are represented by their logical variables.
struct Basis {
  std::vector<VarStatus> cols;
  std::vector<VarStatus> rows;
};

struct Solution {
  Status status = Status::NumericalFailure;
  std::vector<double> primal;
  std::vector<double> activity;
  /// Lagrange multipliers in the convention c + G'lambda = (bound duals):
  /// nonnegative for an active upper row bound, nonpositive for an active
  /// lower row bound. LP only.
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  /// MILP: incumbent minus best bound. LP: 0.
  double gap = 0.0;
  long iterations = 0;
  long nodes = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  Basis basis;
};

struct LpOptions {
  Tolerances tol;
  /// <= 0 selects 50 * (rows + cols).
  long max_iterations = 0;
  int refactor_interval = 50;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int bland_after = 50;
};

/// Bounded-variable revised primal simplex. The basis is factorized through
/// its structural kernel (dense LU), updated with product-form etas and
/// refactorized every `refactor_interval` pivots. Keeps the column-wise copy
/// of the problem so repeated solves with different column bounds (branch
/// and bound) avoid rebuilding it.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LpProblem& problem);
  ~SimplexSolver();
  SimplexSolver(SimplexSolver&&) noexcept;
  SimplexSolver& operator=(SimplexSolver&&) noexcept;

  Solution solve(const LpOptions& options = {}, const Basis* warm_start = nullptr) const;
  Solution solve(std::span<const double> col_lo, std::span<const double> col_hi,
                 const LpOptions& options = {}, const Basis* warm_start = nullptr) const;

  int num_cols() const;
  int num_rows() const;

  struct Data;

 private:
  std::unique_ptr<Data> data_;
};

Solution solve_lp(const LpProblem& problem, const LpOptions& options = {},
                  const Basis* warm_start = nullptr);

/// LP plus a set of binary columns.
struct MilpProblem {
  LpProblem lp;
  std::vector<int> binaries;
};

struct MilpOptions {
  LpOptions lp;
  long max_nodes = 1'000'000;
  int max_binaries = 40;
  double absolute_gap = 1e-6;
};

/// Best-bound branch and bound over the binary columns, branching on the
/// most fractional binary. Throws Error(TooManyBinaries) above the guard.
Solution solve_milp(const MilpProblem& problem, const MilpOptions& options = {});

}  // namespace flexagg::lp
