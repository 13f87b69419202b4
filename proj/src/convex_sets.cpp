#include "conelab/convex_sets.hpp"

#include <cmath>
#include <stdexcept>

#include "conelab/version.hpp"

namespace conelab {
namespace {

class ConeSet final : public ConvexSet {
 public:
  explicit ConeSet(ConePtr K) : K_(std::move(K)) {}
  int dim() const override { return K_->dim(); }
  Vec project(const Vec& v) const override { return K_->project(v); }
  bool is_cone() const override { return true; }
  std::optional<Mat> subspace_basis() const override {
    return as_subspace_basis(*K_);
  }

 private:
  ConePtr K_;
};

class BallSet final : public ConvexSet {
 public:
  BallSet(int d, double r) : d_(d), r_(r) {}
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    const double n = v.norm();
    if (n <= r_) return v;
    return (r_ / n) * v;
  }
  std::optional<double> ball_radius() const override { return r_; }

 private:
  int d_;
  double r_;
};

class AffineSet final : public ConvexSet {
 public:
  AffineSet(const Mat& A, const Vec& b) : A_(A), b_(b), cod_(A) {
    Vec x0 = cod_.solve(b_);
    if ((A_ * x0 - b_).norm() > 1e-8 * (1.0 + b_.norm()))
      throw std::invalid_argument("affine set: right-hand side unattainable");
  }
  int dim() const override { return static_cast<int>(A_.cols()); }
  Vec project(const Vec& v) const override {
    return v - cod_.solve(A_ * v - b_);
  }
  bool is_cone() const override { return false; }

 private:
  Mat A_;
  Vec b_;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod_;
};

class HalfspaceSet final : public ConvexSet {
 public:
  HalfspaceSet(Vec u, double c) : u_(std::move(u)), c_(c) {}
  int dim() const override { return static_cast<int>(u_.size()); }
  Vec project(const Vec& v) const override {
    const double s = u_.dot(v);
    if (s >= c_) return v;
    return v + (c_ - s) * u_;
  }
  bool is_cone() const override { return c_ == 0.0; }

 private:
  Vec u_;
  double c_;
};

class ImageConeSet final : public ConvexSet {
 public:
  ImageConeSet(Mat G, ConePtr K, ImageOpts opts)
      : G_(std::move(G)), K_(std::move(K)), opts_(opts),
        m_(static_cast<int>(G_.rows())) {
    if (G_.cols() != K_->dim())
      throw std::invalid_argument("image cone: column/dim mismatch");
    auto basis = as_subspace_basis(*K_);
    if (basis) {
      exact_ = true;
      span_ = orthonormal_span(basis->cols() ? Mat(G_ * *basis) : Mat(m_, 0));
    } else {
      sigma_ = sigma_max_power(G_);
    }
  }
  int dim() const override { return m_; }
  Vec project(const Vec& y) const override {
    if (exact_) {
      if (span_.cols() == 0) return Vec::Zero(m_);
      return span_ * (span_.transpose() * y);
    }
    return project_iterative(y).point;
  }
  bool is_cone() const override { return true; }
  std::optional<Mat> subspace_basis() const override {
    if (exact_) return span_;
    return std::nullopt;
  }

  ImageProjection project_iterative(const Vec& y) const {
    ImageProjection out;
    const int n = static_cast<int>(G_.cols());
    if (sigma_ == 0.0) {
      out.point = Vec::Zero(m_);
      out.preimage = Vec::Zero(n);
      return out;
    }
    const double eta = 1.0 / (sigma_ * sigma_);
    const double scale = 1.0 + y.squaredNorm();
    Vec mu = Vec::Zero(n);
    Vec r = y;
    double f_prev = 0.5 * r.squaredNorm();
    int it = 0;
    bool converged = false;
    for (; it < opts_.max_iters; ++it) {
      mu = K_->project(mu + eta * (G_.transpose() * r));
      r = y - G_ * mu;
      const double f = 0.5 * r.squaredNorm();
      if (f_prev - f <= opts_.tol * scale) {
        converged = true;
        ++it;
        break;
      }
      f_prev = f;
    }
    out.point = G_ * mu;
    out.preimage = std::move(mu);
    out.iterations = it;
    out.converged = converged;
    return out;
  }

  const Mat& matrix() const { return G_; }
  const ConePtr& cone() const { return K_; }

 private:
  Mat G_;
  ConePtr K_;
  ImageOpts opts_;
  int m_;
  bool exact_ = false;
  Mat span_;
  double sigma_ = 0.0;
};

// {mu : G mu >= 0 componentwise}: Dykstra over the row halfspaces.
class RowwisePreimageSet final : public ConvexSet {
 public:
  explicit RowwisePreimageSet(const Mat& G) : n_(static_cast<int>(G.cols())) {
    for (int i = 0; i < G.rows(); ++i) {
      const double nr = G.row(i).norm();
      if (nr > 0.0) rows_.push_back(G.row(i).transpose() / nr);
    }
  }
  int dim() const override { return n_; }
  bool is_cone() const override { return true; }
  Vec project(const Vec& v) const override {
    const size_t m = rows_.size();
    if (m == 0) return v;
    Vec x = v;
    Mat corr = Mat::Zero(n_, static_cast<int>(m));
    const double scale = 1.0 + v.norm();
    Vec prev(n_);
    for (int cycle = 0; cycle < 200; ++cycle) {
      prev = x;
      for (size_t i = 0; i < m; ++i) {
        Vec w = x + corr.col(static_cast<int>(i));
        const double s = rows_[i].dot(w);
        x = (s >= 0.0) ? w : Vec(w - s * rows_[i]);
        corr.col(static_cast<int>(i)) = w - x;
      }
      if (cycle > 0 && (x - prev).norm() <= 1e-10 * scale) break;
    }
    return x;
  }

 private:
  std::vector<Vec> rows_;
  int n_;
};

// Generic fallback: penalty continuation on 1/2|mu-z|^2 + rho/2 dist^2(G mu, L).
class PenaltyPreimageSet final : public ConvexSet {
 public:
  PenaltyPreimageSet(Mat G, ConePtr L) : G_(std::move(G)), L_(std::move(L)) {
    sigma2_ = sigma_max_power(G_);
    sigma2_ *= sigma2_;
  }
  int dim() const override { return static_cast<int>(G_.cols()); }
  bool is_cone() const override { return true; }
  Vec project(const Vec& z) const override {
    Vec mu = z;
    const double scale = 1.0 + z.norm();
    for (double rho : {1e2, 1e4, 1e6, 1e8}) {
      const double eta = 1.0 / (1.0 + rho * sigma2_);
      for (int it = 0; it < 400; ++it) {
        Vec y = G_ * mu;
        Vec w = L_->project(y);
        Vec step = (mu - z) + rho * (G_.transpose() * (y - w));
        mu -= eta * step;
        if (eta * step.norm() <= 1e-12 * scale) break;
      }
    }
    return mu;
  }

 private:
  Mat G_;
  ConePtr L_;
  double sigma2_ = 0.0;
};

}  // namespace

SetPtr set_from_cone(ConePtr K) {
  if (!K) throw std::invalid_argument("set_from_cone: null cone");
  return std::make_shared<ConeSet>(std::move(K));
}

SetPtr make_ball(int d, double radius) {
  if (d < 1 || !(radius > 0.0))
    throw std::invalid_argument("ball: need d >= 1 and radius > 0");
  return std::make_shared<BallSet>(d, radius);
}

SetPtr make_affine(const Mat& A, const Vec& b) {
  if (A.rows() != b.size())
    throw std::invalid_argument("affine set: row/rhs mismatch");
  return std::make_shared<AffineSet>(A, b);
}

SetPtr make_halfspace_set(const Vec& normal, double offset) {
  const double n = normal.norm();
  if (n == 0.0) throw std::invalid_argument("halfspace set: zero normal");
  return std::make_shared<HalfspaceSet>(normal / n, offset / n);
}

ImageProjection project_image_cone(const Mat& G, const ConePtr& K,
                                   const Vec& y, const ImageOpts& opts) {
  ImageConeSet set(G, K, opts);
  if (auto basis = set.subspace_basis()) {
    ImageProjection out;
    out.point = set.project(y);
    // Exact path: report a least-squares preimage for completeness.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(G);
    out.preimage = cod.solve(out.point);
    out.iterations = 0;
    out.converged = true;
    return out;
  }
  return set.project_iterative(y);
}

SetPtr make_image_cone(Mat G, ConePtr K, ImageOpts opts) {
  return std::make_shared<ImageConeSet>(std::move(G), std::move(K), opts);
}

SetPtr preimage_oracle(const Mat& G, const ConePtr& L) {
  if (!L) throw std::invalid_argument("preimage: null cone");
  if (G.rows() != L->dim())
    throw std::invalid_argument("preimage: row/dim mismatch");
  const int n = static_cast<int>(G.cols());
  if (auto basis = as_subspace_basis(*L)) {
    // {mu : G mu in span(Q)} = null(P_{Q^perp} G), an exact subspace.
    Mat B = G;
    if (basis->cols() > 0) B -= *basis * (basis->transpose() * G);
    return set_from_cone(make_subspace_prevalidated(null_space_basis(B), n));
  }
  if (L->kind() == ConeKind::kOrthant)
    return std::make_shared<RowwisePreimageSet>(G);
  if (auto u = halfspace_normal(*L)) {
    // L = {y : <u,y> >= 0}  =>  G^{-1}L = {mu : <G^T u, mu> >= 0}.
    Vec w = G.transpose() * *u;
    if (w.norm() <= kRankCutoffRel) return set_from_cone(make_full(n));
    return set_from_cone(make_halfspace(w));
  }
  if (L->kind() == ConeKind::kNegated)
    return preimage_oracle(Mat(-G), wrapped_inner(*L));
  return std::make_shared<PenaltyPreimageSet>(G, L);
}

}  // namespace conelab
