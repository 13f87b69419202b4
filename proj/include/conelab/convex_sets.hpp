#pragma once

#include <memory>
#include <optional>

#include "conelab/cones.hpp"

namespace conelab {

// Closed convex set with a (possibly tolerance-controlled) metric projection.
// Projections are idempotent and nonexpansive; implementations are immutable
// and safe for concurrent use.
class ConvexSet {
 public:
  virtual ~ConvexSet() = default;
  virtual int dim() const = 0;
  virtual Vec project(const Vec& v) const = 0;
  virtual bool is_cone() const { return false; }
  // Orthonormal basis when the set is exactly a linear subspace.
  virtual std::optional<Mat> subspace_basis() const { return std::nullopt; }
  // Radius when the set is an origin-centered ball.
  virtual std::optional<double> ball_radius() const { return std::nullopt; }
  double distance(const Vec& v) const { return (v - project(v)).norm(); }
};

using SetPtr = std::shared_ptr<const ConvexSet>;

SetPtr set_from_cone(ConePtr K);
SetPtr make_ball(int d, double radius);
// {x : A x = b}; projection through a rank-revealing pseudo-inverse.
// Throws if b is not attainable (empty set).
SetPtr make_affine(const Mat& A, const Vec& b);
// {x : <normal, x> >= offset}; normal is normalized (offset rescaled).
SetPtr make_halfspace_set(const Vec& normal, double offset);

struct ImageOpts {
  int max_iters = 500;
  double tol = 1e-12;  // successive objective decrease, relative scale
};

struct ImageProjection {
  Vec point;      // projection of y onto G K
  Vec preimage;   // the mu achieving it
  int iterations = 0;
  bool converged = true;
};

// Projection of y onto the image cone G K by proximal gradient with step
// 1/sigma_max(G)^2. When K is an exact subspace the image is a subspace and
// the projection is exact (QR/SVD based, no iteration).
ImageProjection project_image_cone(const Mat& G, const ConePtr& K,
                                   const Vec& y, const ImageOpts& opts = {});

// The set G K as a projection oracle.
SetPtr make_image_cone(Mat G, ConePtr K, ImageOpts opts = {});

// The set G^{-1} L = {mu : G mu in L}.
//   L subspace-like  -> exact null-space oracle (subspace basis available)
//   L orthant        -> cyclic Dykstra over the row halfspaces
//   L halfspace      -> single exact halfspace
//   L negated        -> recurses on (-G, inner)
//   otherwise        -> penalty-continuation proximal gradient (approximate)
SetPtr preimage_oracle(const Mat& G, const ConePtr& L);

}  // namespace conelab
