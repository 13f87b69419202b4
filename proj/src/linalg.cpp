#include "conelab/linalg.hpp"

#include <cmath>

#include "conelab/version.hpp"

namespace conelab {

Mat orthonormal_span(const Mat& M) {
  const int d = static_cast<int>(M.rows());
  if (M.cols() == 0) return Mat(d, 0);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() ? kRankCutoffRel * sv[0] : 0.0;
  int r = 0;
  while (r < sv.size() && sv[r] > cutoff && sv[r] > 0.0) ++r;
  return svd.matrixU().leftCols(r);
}

Mat null_space_basis(const Mat& M) {
  const int n = static_cast<int>(M.cols());
  if (M.rows() == 0 || M.size() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() ? kRankCutoffRel * sv[0] : 0.0;
  int r = 0;
  while (r < sv.size() && sv[r] > cutoff && sv[r] > 0.0) ++r;
  return svd.matrixV().rightCols(n - r);
}

Mat orthonormal_complement(const Mat& Q) {
  const int d = static_cast<int>(Q.rows());
  const int k = static_cast<int>(Q.cols());
  if (k == 0) return Mat::Identity(d, d);
  if (k >= d) return Mat(d, 0);
  Eigen::HouseholderQR<Mat> qr(Q);
  Mat full = qr.householderQ();
  return full.rightCols(d - k);
}

double sigma_max_power(const Mat& G) {
  if (G.size() == 0) return 0.0;
  const int n = static_cast<int>(G.cols());
  Vec v = Vec::Ones(n);
  v[0] += 0.5;  // break symmetry against an unlucky orthogonal start
  v.normalize();
  double lam = 0.0;
  Vec w(n);
  for (int it = 0; it < 600; ++it) {
    w.noalias() = G.transpose() * (G * v);
    const double nl = w.norm();
    if (nl == 0.0) return 0.0;
    v = w / nl;
    if (it > 20 && std::abs(nl - lam) <= 1e-13 * nl) {
      lam = nl;
      break;
    }
    lam = nl;
  }
  return std::sqrt(lam);
}

}  // namespace conelab
