#pragma once
// Brute-force references for the LP/MILP engines. Deliberately naive.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "flexagg/lp.hpp"

namespace oracle {

/// One inequality a'y <= b.
struct Halfspace {
  std::vector<double> a;
  double b;
};

/// min c'y over {y : a_k'y <= b_k} by enumerating every basis of n active
/// constraints. Assumes the region is bounded.
inline std::optional<double> vertex_enumeration_min(const std::vector<Halfspace>& hs,
                                                    const std::vector<double>& c) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(hs.size());
  std::optional<double> best;
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int depth, int start) {
    if (depth == n) {
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd b(n);
      for (int r = 0; r < n; ++r) {
        for (int j = 0; j < n; ++j) a(r, j) = hs[pick[r]].a[j];
        b[r] = hs[pick[r]].b;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rank() < n) return;
      const Eigen::VectorXd y = lu.solve(b);
      for (const auto& h : hs) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += h.a[j] * y[j];
        if (s > h.b + 1e-9) return;
      }
      double obj = 0.0;
      for (int j = 0; j < n; ++j) obj += c[j] * y[j];
      if (!best || obj < *best) best = obj;
      return;
    }
    for (int k = start; k <= m - (n - depth); ++k) {
      pick[depth] = k;
      rec(depth + 1, k + 1);
    }
  };
  rec(0, 0);
  return best;
}

struct RandomLp {
  flexagg::lp::LpProblem lp;
  std::vector<Halfspace> halfspaces;  // rows and bounds in <= form
  std::vector<double> cost;
};

/// Feasible bounded LP with `rows` constraints over `cols` nonnegative
/// variables. The last row caps the sum of all variables. Rows are randomly
/// stated as <=, >= or ranged so every bound kind is exercised.
inline RandomLp random_lp(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RandomLp out;
  std::vector<double> y0(cols);
  for (auto& v : y0) v = u01(rng);
  for (int j = 0; j < cols; ++j) {
    out.cost.push_back(u(rng));
    out.lp.add_variable(out.cost.back(), 0.0, flexagg::lp::kInf);
    std::vector<double> a(cols, 0.0);
    a[j] = -1.0;
    out.halfspaces.push_back({a, 0.0});
  }
  std::vector<int> idx(cols);
  for (int j = 0; j < cols; ++j) idx[j] = j;
  for (int i = 0; i < rows; ++i) {
    std::vector<double> a(cols);
    if (i + 1 == rows) {
      std::fill(a.begin(), a.end(), 1.0);
    } else {
      for (auto& v : a) v = u(rng);
    }
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += a[j] * y0[j];
    const double b = s + u01(rng) * (i + 1 == rows ? 4.0 : 1.0);
    const int form = static_cast<int>(u01(rng) * 3.0);
    if (form == 0) {
      out.lp.add_le(idx, a, b);
    } else if (form == 1) {
      std::vector<double> neg(a);
      for (auto& v : neg) v = -v;
      out.lp.add_ge(idx, neg, -b);
    } else {
      // Ranged row whose lower side is slack at y0 but may still bind.
      const double lo = s - u01(rng);
      out.lp.add_row(idx, a, lo, b);
      std::vector<double> neg(a);
      for (auto& v : neg) v = -v;
      out.halfspaces.push_back({neg, -lo});
    }
    out.halfspaces.push_back({a, b});
  }
  return out;
}

struct RandomKnapsack {
  flexagg::lp::MilpProblem milp;
  std::vector<double> value;
  std::vector<std::vector<double>> weight;
  std::vector<double> capacity;
};

/// Maximize value'b subject to a few knapsack rows, b binary. Stored as a
/// minimization of -value'b.
inline RandomKnapsack random_knapsack(std::mt19937_64& rng, int items, int rows) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  RandomKnapsack k;
  std::vector<int> idx(items);
  for (int j = 0; j < items; ++j) {
    idx[j] = j;
    k.value.push_back(u(rng));
    k.milp.lp.add_variable(-k.value.back(), 0.0, 1.0);
    k.milp.binaries.push_back(j);
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<double> w(items);
    double total = 0.0;
    for (auto& v : w) {
      v = u(rng);
      total += v;
    }
    const double cap = total * (0.25 + 0.25 * u(rng));
    k.weight.push_back(w);
    k.capacity.push_back(cap);
    k.milp.lp.add_le(idx, w, cap);
  }
  return k;
}

/// Best value over all 2^items assignments.
inline double knapsack_exhaustive(const RandomKnapsack& k) {
  const int items = static_cast<int>(k.value.size());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << items); ++mask) {
    bool ok = true;
    for (std::size_t r = 0; r < k.weight.size() && ok; ++r) {
      double s = 0.0;
      for (int j = 0; j < items; ++j) {
        if (mask >> j & 1u) s += k.weight[r][j];
      }
      ok = s <= k.capacity[r] + 1e-12;
    }
    if (!ok) continue;
    double v = 0.0;
    for (int j = 0; j < items; ++j) {
      if (mask >> j & 1u) v += k.value[j];
    }
    best = std::max(best, v);
  }
  return best;
}

}  // namespace oracle
