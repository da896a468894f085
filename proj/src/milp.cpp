#include <algorithm>
#include <cmath>
#include <queue>

#include "flexagg/error.hpp"
#include "flexagg/lp.hpp"

namespace flexagg::lp {

namespace {

struct Node {
  double bound;
  long order;
  std::vector<double> lo, hi;
  Basis basis;
};

struct WorseBound {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.order > b.order;
  }
};

}  // namespace

Solution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  const int nb = static_cast<int>(problem.binaries.size());
  if (nb > options.max_binaries) {
    throw Error(ErrorCode::TooManyBinaries,
                std::to_string(nb) + " binaries exceed the guard of " +
                    std::to_string(options.max_binaries));
  }
  const SimplexSolver solver(problem.lp);
  std::vector<double> lo = problem.lp.col_lo();
  std::vector<double> hi = problem.lp.col_hi();
  for (int j : problem.binaries) {
    if (j < 0 || j >= problem.lp.num_cols()) {
      throw Error(ErrorCode::DimensionMismatch, "binary index out of range");
    }
    lo[j] = std::max(lo[j], 0.0);
    hi[j] = std::min(hi[j], 1.0);
  }
  const double itol = options.lp.tol.integrality;

  Solution best;
  best.status = Status::Infeasible;
  double incumbent = kInf;
  long nodes = 0;
  long iterations = 0;
  long order = 0;

  std::priority_queue<Node, std::vector<Node>, WorseBound> open;
  open.push(Node{-kInf, order++, lo, hi, {}});
  bool hit_limit = false;

  while (!open.empty()) {
    if (open.top().bound >= incumbent - options.absolute_gap) break;
    if (nodes >= options.max_nodes) {
      hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    ++nodes;

    Solution rel = solver.solve(node.lo, node.hi, options.lp,
                                node.basis.cols.empty() ? nullptr : &node.basis);
    iterations += rel.iterations;
    if (rel.status == Status::Infeasible) continue;
    if (rel.status == Status::Unbounded) {
      best.status = Status::Unbounded;
      best.nodes = nodes;
      best.iterations = iterations;
      return best;
    }
    if (rel.status != Status::Optimal) {
      best.status = rel.status;
      best.nodes = nodes;
      best.iterations = iterations;
      return best;
    }
    if (rel.objective >= incumbent - options.absolute_gap) continue;

    int branch = -1;
    double most = itol;
    for (int j : problem.binaries) {
      const double v = rel.primal[j];
      const double frac = std::abs(v - std::round(v));
      if (frac > most) {
        most = frac;
        branch = j;
      }
    }

    if (branch < 0) {
      // Integral up to tolerance: re-solve with the binaries pinned so the
      // incumbent is exactly integral.
      std::vector<double> flo = node.lo;
      std::vector<double> fhi = node.hi;
      for (int j : problem.binaries) flo[j] = fhi[j] = std::round(rel.primal[j]);
      Solution fixed = solver.solve(flo, fhi, options.lp, &rel.basis);
      iterations += fixed.iterations;
      if (fixed.status == Status::Optimal && fixed.objective < incumbent) {
        incumbent = fixed.objective;
        best = std::move(fixed);
      }
      continue;
    }

    for (double value : {0.0, 1.0}) {
      Node child{rel.objective, order++, node.lo, node.hi, rel.basis};
      child.lo[branch] = child.hi[branch] = value;
      open.push(std::move(child));
    }
  }

  best.nodes = nodes;
  best.iterations = iterations;
  if (std::isfinite(incumbent)) {
    const double bound = open.empty() ? incumbent : std::min(incumbent, open.top().bound);
    best.gap = incumbent - bound;
    best.status = hit_limit ? Status::NodeLimit : Status::Optimal;
  } else {
    best.status = hit_limit ? Status::NodeLimit : Status::Infeasible;
  }
  return best;
}

}  // namespace flexagg::lp
