#pragma once

#include <optional>
#include <vector>

#include "conelab/cones.hpp"
#include "conelab/extended_real.hpp"
#include "conelab/rng.hpp"

namespace conelab {

struct EstimateCI {
  double mean = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  long long n = 0;
};

EstimateCI mean_ci(const std::vector<double>& xs);

// Monte Carlo statistical dimension: mean of |P_K(g)|^2 over standard normal
// draws. Trial i consumes sub-stream i of `base`, so evaluation order (or
// concurrency) cannot change the estimate.
EstimateCI stat_dim_mc(const Cone& K, long long trials, const RngStream& base);

enum class Cap { kBall, kSphere };

// Gaussian width of K cap {|x| <= 1} (kBall) or K cap {|x| = 1} (kSphere).
// The ball cap uses the projection-norm identity; the sphere cap falls back
// to projected ascent when the projection vanishes (gauge inside the polar).
EstimateCI gaussian_width_mc(const Cone& K, Cap cap, long long trials,
                             const RngStream& base);

// Support-function value of a circular cone's unit cap in closed form;
// an independent algebraic route used to cross-check the projection identity.
double circular_cap_support(int d, double alpha, const Vec& g);

// inf over beta >= 0 of  -a1*beta + a3*sqrt(beta^2 + 2*a2*beta + 1),
// for a1 >= 0, a2 in [0,1], a3 >= 0.
ExtReal p_inf(double a1, double a2, double a3);

// inf over beta in [1, R] of  a1*beta - a2*sqrt(beta^2 - 1), for a1, a2 >= 0;
// R = nullopt means the unbounded interval [1, inf).
ExtReal q_inf(double a1, double a2, std::optional<double> R = std::nullopt);

struct ConicSingularValue {
  double value = 0.0;
  bool sweep_certified = false;  // dense sweep ran (only possible for d <= 3)
};

// min over unit mu in K of |G mu|, by multi-start projected gradient descent;
// in ambient dimension <= 3 a dense sweep at `mesh` resolution certifies the
// result to mesh * sigma_max(G).
ConicSingularValue min_conic_singular_value(const Mat& G, const Cone& K,
                                            const RngStream& base,
                                            int starts = 24,
                                            double mesh = 1e-3);

struct TailRow {
  double s = 0.0;
  double observed = 0.0;
  double bound = 0.0;  // 2 exp(-s^2/2)
  double slack = 0.0;  // three binomial standard errors
  bool pass = false;
};

struct ConcentrationReport {
  double mean = 0.0;
  std::vector<TailRow> rows;
  bool pass = false;
};

// Empirical check that the capped supremum concentrates at sub-Gaussian rate:
// P(|sup - mean| > s) <= 2 exp(-s^2/2) + slack for s in {1,2,3}.
ConcentrationReport concentration_check(const Cone& K, long long trials,
                                        const RngStream& base);

}  // namespace conelab
