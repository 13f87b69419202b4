#include "conelab/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace conelab {
namespace {

IntersectionVerdict detect_subspace_exact(const Mat& Qa, const Mat& Qb,
                                          int d) {
  IntersectionVerdict v;
  v.exact = true;
  const int a = static_cast<int>(Qa.cols());
  const int b = static_cast<int>(Qb.cols());
  if (a == 0 || b == 0) return v;
  if (a == d || b == d) {
    v.nontrivial = true;
    v.rho = 1.0;
    v.witness = (a == d) ? Vec(Qb.col(0)) : Vec(Qa.col(0));
    return v;
  }
  Eigen::JacobiSVD<Mat> svd(Qa.transpose() * Qb,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s1 = svd.singularValues()[0];
  v.rho = std::min(s1, 1.0);
  // Principal cosine indistinguishable from 1 at working precision means the
  // subspaces genuinely share a direction (angle below ~1.4e-6 rad).
  if (s1 >= 1.0 - 1e-12) {
    v.nontrivial = true;
    Vec w = Qa * svd.matrixU().col(0);
    v.witness = w / w.norm();
  }
  return v;
}

}  // namespace

IntersectionVerdict detect_nontrivial_intersection(const ConvexSet& A,
                                                   const ConvexSet& B, int d,
                                                   const DetectOpts& opts,
                                                   RngStream& stream) {
  if (A.dim() != d || B.dim() != d)
    throw std::invalid_argument("detect: ambient dimension mismatch");
  if (!A.is_cone() || !B.is_cone())
    throw std::invalid_argument("detect: both sets must be cones");

  const auto Qa = A.subspace_basis();
  const auto Qb = B.subspace_basis();
  if (Qa && Qb) return detect_subspace_exact(*Qa, *Qb, d);

  IntersectionVerdict best;
  int total_iters = 0;
  for (int s = 0; s < opts.starts; ++s) {
    Vec x = gaussian_vector(stream, d);
    double nx = x.norm();
    if (nx == 0.0) continue;
    x /= nx;
    double rho = 0.0;
    double window_db = std::numeric_limits<double>::infinity();
    int since_check = 0;
    int restarts = 0;
    std::vector<double> trace;
    for (int it = 0; it < opts.max_iters; ++it) {
      ++total_iters;
      Vec y = B.project(x);
      Vec z = A.project(y);
      const double nz = z.norm();
      if (nz < 1e-14) {
        // One of the projections annihilated the direction; try a fresh one.
        if (++restarts > 3) break;
        do {
          x = gaussian_vector(stream, d);
        } while (x.norm() == 0.0);
        x /= x.norm();
        continue;
      }
      x = z / nz;
      rho = std::max(rho, nz);
      if (opts.record_trace) trace.push_back(nz);
      const double db = (x - B.project(x)).norm();
      if (1.0 - nz <= opts.rho_tol && db <= opts.dist_tol &&
          A.distance(x) <= opts.dist_tol) {
        IntersectionVerdict v;
        v.nontrivial = true;
        v.witness = x;
        v.rho = nz;
        v.iterations = total_iters;
        v.trace = std::move(trace);
        return v;
      }
      // Plateau detection on the only quantity still improving.
      if (++since_check >= opts.stagnation_window) {
        since_check = 0;
        if (window_db - db <= opts.stagnation_tol && db > opts.dist_tol) break;
        window_db = db;
      }
    }
    if (rho > best.rho) {
      best.rho = rho;
      best.witness = x;
      best.trace = std::move(trace);
    }
  }
  best.iterations = total_iters;
  return best;
}

void sweep_unit_directions(int d, double mesh,
                           const std::function<bool(const Vec&)>& visit) {
  if (d < 1 || d > 3)
    throw std::invalid_argument("direction sweep: dimension must be 1..3");
  if (!(mesh > 0.0))
    throw std::invalid_argument("direction sweep: mesh must be positive");
  if (d == 1) {
    Vec u(1);
    u[0] = 1.0;
    if (visit(u)) return;
    u[0] = -1.0;
    visit(u);
    return;
  }
  if (d == 2) {
    Vec u(2);
    for (double th = 0.0; th < 2.0 * std::numbers::pi; th += mesh) {
      u[0] = std::cos(th);
      u[1] = std::sin(th);
      if (visit(u)) return;
    }
    return;
  }
  Vec u(3);
  const int n_lat = std::max(2, static_cast<int>(std::numbers::pi / mesh) + 1);
  for (int i = 0; i <= n_lat; ++i) {
    const double th = std::numbers::pi * i / n_lat;
    const double st = std::sin(th), ct = std::cos(th);
    const int n_lon =
        std::max(1, static_cast<int>(2.0 * std::numbers::pi * st / mesh));
    for (int j = 0; j < n_lon; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / n_lon;
      u[0] = st * std::cos(ph);
      u[1] = st * std::sin(ph);
      u[2] = ct;
      if (visit(u)) return;
    }
  }
}

bool brute_force_intersection_oracle(const ConvexSet& A, const ConvexSet& B,
                                     int d, double mesh) {
  const double tol = 2.0 * mesh;
  bool found = false;
  sweep_unit_directions(d, mesh, [&](const Vec& u) {
    if (A.distance(u) <= tol && B.distance(u) <= tol) {
      found = true;
      return true;
    }
    return false;
  });
  return found;
}

}  // namespace conelab
