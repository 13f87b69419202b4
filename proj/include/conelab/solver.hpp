#pragma once

#include <optional>
#include <vector>

#include "conelab/convex_sets.hpp"
#include "conelab/intersect.hpp"

namespace conelab {

struct SolverOptions {
  int max_iters = 2000;      // iteration budget of first-order loops
  int dykstra_cycles = 500;  // full sweeps through the set list
  double tol = 1e-10;        // displacement / objective stall tolerance
  double kkt_tol = 1e-6;     // variational-inequality validation slack
  double dist_tol = 1e-6;    // feasibility distances, certificate checks
  DetectOpts detect;         // recession-direction detector settings
};

struct DykstraResult {
  Vec point;
  int cycles = 0;
  bool converged = false;
};

// Cyclic Dykstra projection onto the intersection of the given sets.
DykstraResult dykstra(const std::vector<SetPtr>& sets, const Vec& point,
                      const SolverOptions& opts = {});

struct SupportValue {
  double value = 0.0;
  Vec argmax;
  bool converged = true;
};

// sup of <x_obj, mu> over the intersection of `sets`, which must contain a
// ball (compactness guard; configurations without one are rejected).
// Projected gradient ascent with Dykstra as the feasibility engine.
SupportValue support_function(const Vec& x_obj, const std::vector<SetPtr>& sets,
                              const SolverOptions& opts = {});

// K intersected with the halfspace {mu : <x,mu> >= 0}; x unit.
ConePtr restricted_cone(const ConePtr& K, const Vec& x);

enum class CpKind { kInfeasible, kBounded, kUnbounded };

struct CpOutcome {
  CpKind kind = CpKind::kBounded;
  // Present iff kind == kBounded.
  std::optional<double> value;
  // Bounded: an (approximately) optimal feasible point. Unbounded: a unit
  // recession direction with positive objective. Absent otherwise.
  std::optional<Vec> certificate;
  // Ball-growth exhausted without the maximizer detaching from the boundary;
  // reported as Unbounded with this diagnostic set.
  bool suspected_unbounded = false;
  bool converged = true;
};

// sup <x, mu> s.t. G mu = b, mu in K. Three stages: proximal-gradient
// feasibility, recession-direction detection on null(G) and the objective-
// restricted cone, then ball-growth evaluation of the finite value.
CpOutcome solve_conic_program(const Vec& x, const Mat& G, const Vec& b,
                              const ConePtr& K, RngStream& stream,
                              const SolverOptions& opts = {});

// Log-likelihood of the logistic model at parameter beta for labels y in
// {-1,+1}: sum of -softplus(-y_i <x_i, beta>). Overflow-safe.
double logistic_loglik(const Mat& X, const Vec& y, const Vec& beta);

struct MleExistence {
  bool exists = true;
  bool detector_converged = true;
  double rho = 0.0;
};

// The constrained MLE over the parameter cone K fails to exist iff the
// row-scaled data cone diag(y) X K meets the nonnegative orthant
// nontrivially (perfect-separation geometry).
MleExistence logistic_mle_exists(const Mat& X, const Vec& y, const ConePtr& K,
                                 RngStream& stream,
                                 const DetectOpts& opts = {});

}  // namespace conelab
