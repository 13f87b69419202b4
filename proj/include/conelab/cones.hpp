#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conelab/linalg.hpp"
#include "conelab/rng.hpp"

namespace conelab {

enum class ConeKind {
  kTrivial,
  kFull,
  kOrthant,
  kSubspace,
  kSecondOrder,
  kCircular,
  kHalfspace,
  kProduct,
  kPolar,
  kNegated,
  kRestricted,
};

class Cone;
using ConePtr = std::shared_ptr<const Cone>;

// Closed convex cone with an exact or tolerance-controlled metric projection.
// Instances are immutable after construction; projection is a pure function
// and safe for unrestricted concurrent use.
class Cone {
 public:
  virtual ~Cone() = default;
  virtual ConeKind kind() const = 0;
  virtual int dim() const = 0;
  virtual Vec project(const Vec& v) const = 0;
  // Polar cone; closed forms where available, Moreau-backed wrapper otherwise.
  virtual ConePtr polar() const = 0;
  virtual std::string describe() const = 0;
};

ConePtr make_trivial(int d);
ConePtr make_full(int d);
ConePtr make_orthant(int d);
// Basis columns are orthonormalized (rank-revealing); dependent columns drop.
ConePtr make_subspace(const Mat& basis);
// Basis already orthonormal; taken as-is.
ConePtr make_subspace_prevalidated(Mat basis, int ambient_dim);
// {(z,t) in R^{d-1} x R : |z| <= t}; the final coordinate is the apex axis.
ConePtr make_second_order(int d);
// {v : <v,e1> >= |v| cos(alpha)}, alpha in (0, pi/2).
ConePtr make_circular(int d, double alpha);
// {v : <normal, v> >= 0}; normal is normalized, zero rejected.
ConePtr make_halfspace(const Vec& normal);
ConePtr make_product(std::vector<ConePtr> children);
ConePtr make_polar(const ConePtr& inner);
ConePtr make_negated(const ConePtr& inner);
// K intersected with {mu : <x, mu> >= 0}; x must be unit to 1e-10.
ConePtr make_restricted(const ConePtr& inner, const Vec& x);

// Membership test through the projection map: |v - P(v)| <= tol * (1 + |v|).
bool cone_contains(const Cone& K, const Vec& v, double tol = 1e-9);

struct MoreauParts {
  Vec in_cone;   // projection onto K
  Vec in_polar;  // projection onto the polar of K
};
// Both parts are computed through their own cones' projections, so for
// closed-form polars the identity in_cone + in_polar == v is a genuine
// two-route consistency check rather than a definition.
MoreauParts moreau_decompose(const Cone& K, const Vec& v);

// Orthonormal basis when the cone is exactly a linear subspace (Trivial,
// Full, Subspace, their negations, and products thereof); nullopt otherwise.
std::optional<Mat> as_subspace_basis(const Cone& K);

// Unit normal when the cone is a halfspace through the origin.
std::optional<Vec> halfspace_normal(const Cone& K);

// Wrapped cone for Polar/Negated/Restricted wrappers; nullptr otherwise.
ConePtr wrapped_inner(const Cone& K);

// Exact statistical dimension where a closed form exists:
//   Trivial 0; Full d; Subspace rank; Orthant d/2; SecondOrder d/2;
//   Halfspace d - 1/2; Negated unchanged; Polar d - inner; Product additive.
std::optional<double> stat_dim_closed(const Cone& K);

// Textual grammar:
//   trivial:<d> | full:<d> | orthant:<d> | soc:<d> | circ:<d>:<alpha>
//   | subspace:<d>:<k> | prod:(<spec>,<spec>,...) | polar:(<spec>)
//   | restrict:(<spec>,<vector>)
// Subspace bases are drawn from `basis_stream`, which is required whenever the
// spec mentions one. Dimension fields may be symbolic names resolved through
// `dims` (used by experiment configs to sweep sizes).
struct DimBinding {
  std::string name;
  int value;
};
ConePtr parse_cone(const std::string& spec, RngStream* basis_stream,
                   const std::vector<DimBinding>& dims = {});

// Vector grammar: e<i> (1-indexed basis vector) | ones | neg-ones | comma
// list of doubles with exactly d entries.
Vec parse_vector(const std::string& spec, int d);

}  // namespace conelab
