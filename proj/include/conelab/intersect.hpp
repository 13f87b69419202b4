#pragma once

#include <functional>
#include <vector>

#include "conelab/convex_sets.hpp"
#include "conelab/rng.hpp"

namespace conelab {

struct DetectOpts {
  int starts = 16;
  int max_iters = 400;
  double rho_tol = 1e-4;    // accept when 1 - rho falls below this
  double dist_tol = 1e-6;   // witness must sit this close to both sets
  bool record_trace = false;
  // Abandon a start when the residual has stopped improving; preserves the
  // verdict (a plateau below threshold cannot recover) and the determinism.
  int stagnation_window = 30;
  double stagnation_tol = 1e-13;
};

struct IntersectionVerdict {
  bool nontrivial = false;
  Vec witness;       // unit vector; meaningful when nontrivial
  double rho = 0.0;  // best contraction factor |P_A P_B x| observed
  int iterations = 0;
  bool exact = false;  // decided by the subspace rank computation
  std::vector<double> trace;  // per-iteration rho of the deciding start
};

// Decides whether two closed convex cones share a ray. Both oracles must be
// cones in the same ambient dimension d. When both are exact subspaces the
// verdict comes from a principal-angle rank computation; otherwise a
// normalized alternating-projection power iteration runs from `starts`
// stream-drawn directions. Deterministic given the stream lineage.
IntersectionVerdict detect_nontrivial_intersection(const ConvexSet& A,
                                                   const ConvexSet& B, int d,
                                                   const DetectOpts& opts,
                                                   RngStream& stream);

// Dense sweep over unit directions (d <= 3) at the given angular resolution;
// certifies intersection up to that resolution. Ground truth for low
// dimensional detector validation.
bool brute_force_intersection_oracle(const ConvexSet& A, const ConvexSet& B,
                                     int d, double mesh = 1e-3);

// Visits unit directions covering S^{d-1} (d <= 3) at angular resolution
// `mesh`; stops early when the visitor returns true.
void sweep_unit_directions(int d, double mesh,
                           const std::function<bool(const Vec&)>& visit);

}  // namespace conelab
