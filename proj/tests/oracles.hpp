#pragma once

// Independent minimization oracle for the two boundary functionals.
//
// Both closed forms under test are minima of smooth convex one-dimensional
// objectives:
//   P(beta) = -a1 beta + a3 sqrt(beta^2 + 2 a2 beta + 1)   over beta >= 0
//   Q(beta) =  a1 beta - a2 sqrt(beta^2 - 1)               over beta in [1, R]
// (P is a Euclidean norm composed with an affine map, hence convex; Q is
// convex because sqrt(beta^2 - 1) is concave on [1, inf).) The oracle brackets
// the minimizer on a mixed log/linear grid and refines by ternary search,
// which convexity justifies. It never consults the case analysis under test.
// An infimum of -infinity is recognized by probing far out on the axis; the
// caller is expected to keep the asymptotic slope away from zero, where no
// finite-budget evaluation can classify the objective.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace conelab_test {

inline double ternary_min(const std::function<double(double)>& f, double lo,
                          double hi) {
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return f(0.5 * (lo + hi));
}

inline std::optional<double> convex_min_oracle(
    const std::function<double(double)>& f, double lo, double hi,
    bool check_divergence) {
  if (check_divergence && f(1e9) < -1e6) return std::nullopt;  // unbounded
  std::vector<double> grid;
  grid.push_back(lo);
  for (double g = std::max(lo, 1e-9); g <= hi; g *= 1.12)
    if (g > lo) grid.push_back(g);
  for (double g = lo; g <= std::min(hi, lo + 10.0); g += 0.01)
    grid.push_back(g);
  grid.push_back(hi);
  std::sort(grid.begin(), grid.end());
  // Deduplicate: a repeated endpoint would collapse the refinement bracket
  // to a point and hide a minimizer sitting just inside it.
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  size_t best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  const double L = best > 0 ? grid[best - 1] : grid[best];
  const double H = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  return std::min(best_v, ternary_min(f, L, H));
}

inline std::optional<double> p_oracle(double a1, double a2, double a3) {
  auto f = [&](double b) {
    return -a1 * b + a3 * std::sqrt(b * b + 2.0 * a2 * b + 1.0);
  };
  return convex_min_oracle(f, 0.0, 1e7, /*check_divergence=*/true);
}

inline std::optional<double> q_oracle(double a1, double a2,
                                      std::optional<double> R) {
  auto f = [&](double b) {
    return a1 * b - a2 * std::sqrt(std::max(b * b - 1.0, 0.0));
  };
  if (R) return convex_min_oracle(f, 1.0, *R, /*check_divergence=*/false);
  return convex_min_oracle(f, 1.0, 1e7, /*check_divergence=*/true);
}

}  // namespace conelab_test
