#include "conelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "conelab/intersect.hpp"
#include "conelab/linalg.hpp"

namespace conelab {

EstimateCI mean_ci(const std::vector<double>& xs) {
  EstimateCI e;
  e.n = static_cast<long long>(xs.size());
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (static_cast<double>(e.n) * (e.n - 1.0)));
  }
  e.lo = e.mean - 1.96 * e.se;
  e.hi = e.mean + 1.96 * e.se;
  return e;
}

EstimateCI stat_dim_mc(const Cone& K, long long trials,
                       const RngStream& base) {
  if (trials < 1) throw std::invalid_argument("stat_dim_mc: trials < 1");
  const int d = K.dim();
  std::vector<double> xs(static_cast<size_t>(trials));
  for (long long i = 0; i < trials; ++i) {
    RngStream s = base.substream(static_cast<std::uint64_t>(i));
    Vec g = gaussian_vector(s, d);
    xs[static_cast<size_t>(i)] = K.project(g).squaredNorm();
  }
  return mean_ci(xs);
}

namespace {

// max <g, mu> over unit mu in K when the projection of g onto K vanishes
// (the value is then nonpositive). Projected ascent with renormalization.
double boundary_cap_max(const Cone& K, const Vec& g, RngStream& s) {
  const int d = K.dim();
  const double gn = g.norm();
  if (gn == 0.0) return 0.0;
  const double eta = 0.25 / gn;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int start = 0; start < 4; ++start) {
    Vec mu;
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
      mu = K.project(gaussian_vector(s, d));
      if (mu.norm() > 1e-12) {
        mu /= mu.norm();
        ok = true;
      }
    }
    if (!ok) continue;
    found = true;
    double f_prev = g.dot(mu);
    best = std::max(best, f_prev);
    for (int it = 0; it < 300; ++it) {
      Vec w = K.project(mu + eta * g);
      const double nw = w.norm();
      if (nw < 1e-14) break;
      mu = w / nw;
      const double f = g.dot(mu);
      best = std::max(best, f);
      if (std::abs(f - f_prev) <= 1e-12 * gn) break;
      f_prev = f;
    }
  }
  // Degenerate cap (every direction collapses): treat the width as zero.
  return found ? best : 0.0;
}

}  // namespace

EstimateCI gaussian_width_mc(const Cone& K, Cap cap, long long trials,
                             const RngStream& base) {
  if (trials < 1) throw std::invalid_argument("width: trials < 1");
  const int d = K.dim();
  std::vector<double> xs(static_cast<size_t>(trials));
  for (long long i = 0; i < trials; ++i) {
    RngStream s = base.substream(static_cast<std::uint64_t>(i));
    Vec g = gaussian_vector(s, d);
    const double pn = K.project(g).norm();
    if (cap == Cap::kBall) {
      xs[static_cast<size_t>(i)] = pn;
    } else if (pn > 1e-12 * std::max(1.0, g.norm())) {
      // Nonvanishing projection: the spherical maximizer is its direction.
      xs[static_cast<size_t>(i)] = pn;
    } else {
      xs[static_cast<size_t>(i)] = boundary_cap_max(K, g, s);
    }
  }
  return mean_ci(xs);
}

double circular_cap_support(int d, double alpha, const Vec& g) {
  if (g.size() != d) throw std::invalid_argument("support: dim mismatch");
  const double r = g.norm();
  if (r == 0.0) return 0.0;
  const double theta = std::acos(std::clamp(g[0] / r, -1.0, 1.0));
  if (theta <= alpha) return r;
  const double v = r * std::cos(theta - alpha);
  return std::max(v, 0.0);
}

ExtReal p_inf(double a1, double a2, double a3) {
  if (!(a1 >= 0.0) || !(a2 >= 0.0 && a2 <= 1.0) || !(a3 >= 0.0))
    throw std::invalid_argument("p_inf: need a1,a3 >= 0 and a2 in [0,1]");
  if (a1 > a3) return ExtReal::neg_inf();
  if (a1 < a2 * a3) return ExtReal::finite(a3);
  const double t = std::max((a3 * a3 - a1 * a1) * (1.0 - a2 * a2), 0.0);
  return ExtReal::finite(std::sqrt(t) + a1 * a2);
}

ExtReal q_inf(double a1, double a2, std::optional<double> R) {
  if (!(a1 >= 0.0) || !(a2 >= 0.0))
    throw std::invalid_argument("q_inf: need a1, a2 >= 0");
  if (!R) {
    if (a1 >= a2)
      return ExtReal::finite(std::sqrt(a1 * a1 - a2 * a2));
    return ExtReal::neg_inf();
  }
  const double r = *R;
  if (!(r > 1.0)) throw std::invalid_argument("q_inf: need R > 1");
  const double root = std::sqrt(r * r - 1.0);
  // Derivative at the right endpoint decides between the interior stationary
  // point and the endpoint minimum (the derivative is nondecreasing).
  if (a1 * root >= a2 * r)
    return ExtReal::finite(std::sqrt(std::max(a1 * a1 - a2 * a2, 0.0)));
  return ExtReal::finite(a1 * r - a2 * root);
}

ConicSingularValue min_conic_singular_value(const Mat& G, const Cone& K,
                                            const RngStream& base, int starts,
                                            double mesh) {
  const int d = K.dim();
  if (G.cols() != d)
    throw std::invalid_argument("conic singular value: dim mismatch");
  ConicSingularValue out;
  const double sigma = sigma_max_power(G);
  double best = std::numeric_limits<double>::infinity();
  if (sigma > 0.0) {
    const double eta = 1.0 / (sigma * sigma);
    for (int s = 0; s < starts; ++s) {
      RngStream ss = base.substream(static_cast<std::uint64_t>(s));
      Vec x;
      bool ok = false;
      for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
        x = K.project(gaussian_vector(ss, d));
        if (x.norm() > 1e-12) {
          x /= x.norm();
          ok = true;
        }
      }
      if (!ok) continue;
      best = std::min(best, (G * x).norm());
      for (int it = 0; it < 500; ++it) {
        Vec w = K.project(x - eta * (G.transpose() * (G * x)));
        const double nw = w.norm();
        if (nw < 1e-14) break;
        x = w / nw;
        const double f = (G * x).norm();
        if (f < best)
          best = f;
        else if (it > 50 && f > best + 1e-12)
          break;
      }
    }
  } else {
    best = 0.0;
  }
  if (d <= 3) {
    sweep_unit_directions(d, mesh, [&](const Vec& u) {
      Vec mu = K.project(u);
      const double n = mu.norm();
      if (n > 1e-9) best = std::min(best, (G * mu).norm() / n);
      return false;
    });
    out.sweep_certified = true;
  }
  if (!std::isfinite(best)) best = 0.0;  // empty unit cap (trivial cone)
  out.value = best;
  return out;
}

ConcentrationReport concentration_check(const Cone& K, long long trials,
                                        const RngStream& base) {
  if (trials < 1) throw std::invalid_argument("concentration: trials < 1");
  const int d = K.dim();
  std::vector<double> w(static_cast<size_t>(trials));
  for (long long i = 0; i < trials; ++i) {
    RngStream s = base.substream(static_cast<std::uint64_t>(i));
    w[static_cast<size_t>(i)] = K.project(gaussian_vector(s, d)).norm();
  }
  ConcentrationReport rep;
  double sum = 0.0;
  for (double x : w) sum += x;
  rep.mean = sum / static_cast<double>(trials);
  rep.pass = true;
  for (double s : {1.0, 2.0, 3.0}) {
    TailRow row;
    row.s = s;
    long long cnt = 0;
    for (double x : w)
      if (std::abs(x - rep.mean) > s) ++cnt;
    row.observed = static_cast<double>(cnt) / static_cast<double>(trials);
    row.bound = 2.0 * std::exp(-0.5 * s * s);
    // The bound exceeds one for small s; as a probability it caps there (and
    // the row then holds vacuously, with no sampling slack needed).
    const double prob = std::min(row.bound, 1.0);
    row.slack =
        3.0 * std::sqrt(prob * (1.0 - prob) / static_cast<double>(trials));
    row.pass = row.observed <= row.bound + row.slack;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace conelab
