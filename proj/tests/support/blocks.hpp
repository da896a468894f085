#pragma once

#include <vector>

#include "flexagg/der.hpp"
#include "flexagg/lp.hpp"
#include "support/lp_oracles.hpp"

namespace support {

/// Free columns plus the block rows.
inline flexagg::lp::LpProblem block_lp(const flexagg::der::ConstraintBlock& blk, int dim,
                                       const std::vector<double>& cost = {}) {
  flexagg::lp::LpProblem lp;
  for (int j = 0; j < dim; ++j) {
    lp.add_variable(cost.empty() ? 0.0 : cost[j], -flexagg::lp::kInf, flexagg::lp::kInf);
  }
  for (const auto& r : blk.rows) lp.add_le(r.idx, r.val, r.rhs);
  return lp;
}

inline std::vector<oracle::Halfspace> block_halfspaces(const flexagg::der::ConstraintBlock& blk,
                                                       int dim) {
  std::vector<oracle::Halfspace> out;
  for (const auto& r : blk.rows) {
    std::vector<double> a(dim, 0.0);
    for (std::size_t k = 0; k < r.idx.size(); ++k) a[r.idx[k]] += r.val[k];
    out.push_back({a, r.rhs});
  }
  return out;
}

inline bool satisfies(const flexagg::der::ConstraintBlock& blk, const std::vector<double>& x,
                      double tol) {
  for (const auto& r : blk.rows) {
    double s = 0.0;
    for (std::size_t k = 0; k < r.idx.size(); ++k) s += r.val[k] * x[r.idx[k]];
    if (s > r.rhs + tol) return false;
  }
  return true;
}

}  // namespace support
