#include "conelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "conelab/linalg.hpp"

namespace conelab {

DykstraResult dykstra(const std::vector<SetPtr>& sets, const Vec& point,
                      const SolverOptions& opts) {
  if (sets.empty()) throw std::invalid_argument("dykstra: no sets");
  const int d = sets.front()->dim();
  for (const auto& s : sets)
    if (s->dim() != d) throw std::invalid_argument("dykstra: dim mismatch");

  DykstraResult out;
  Vec x = point;
  const size_t m = sets.size();
  std::vector<Vec> corr(m, Vec::Zero(d));
  const double scale = 1.0 + point.norm();
  Vec prev(d);
  for (int cycle = 0; cycle < opts.dykstra_cycles; ++cycle) {
    prev = x;
    for (size_t i = 0; i < m; ++i) {
      Vec w = x + corr[i];
      x = sets[i]->project(w);
      corr[i] = w - x;
    }
    ++out.cycles;
    if (cycle > 0 && (x - prev).norm() <= opts.tol * scale) {
      out.converged = true;
      break;
    }
  }
  out.point = std::move(x);
  return out;
}

SupportValue support_function(const Vec& x_obj, const std::vector<SetPtr>& sets,
                              const SolverOptions& opts) {
  double radius = 0.0;
  bool has_ball = false;
  for (const auto& s : sets)
    if (auto r = s->ball_radius()) {
      has_ball = true;
      radius = *r;
    }
  if (!has_ball)
    throw std::invalid_argument(
        "support_function: set list must include a ball (unbounded "
        "configurations are rejected)");

  SupportValue out;
  const double xn = x_obj.norm();
  DykstraResult feas = dykstra(sets, Vec::Zero(x_obj.size()), opts);
  Vec mu = feas.point;
  out.converged = feas.converged;
  if (xn == 0.0) {
    out.argmax = mu;
    out.value = 0.0;
    return out;
  }
  const double eta = radius / xn;
  double best = x_obj.dot(mu);
  Vec best_mu = mu;
  const int sweeps = std::max(1, opts.max_iters / 20);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const double sweep_start = best;
    for (int it = 0; it < 20; ++it) {
      DykstraResult step = dykstra(sets, mu + eta * x_obj, opts);
      mu = step.point;
      const double f = x_obj.dot(mu);
      if (f > best) {
        best = f;
        best_mu = mu;
      }
    }
    if (best - sweep_start <= opts.tol * (1.0 + std::abs(best))) break;
  }
  // Pull the reported maximizer into the intersection: plain cyclic
  // projections converge to a point of the intersection itself.
  Vec polished = best_mu;
  for (int cycle = 0; cycle < 60; ++cycle) {
    for (const auto& s : sets) polished = s->project(polished);
  }
  for (const auto& s : sets)
    if (s->distance(polished) > opts.dist_tol) out.converged = false;
  out.value = x_obj.dot(polished);
  out.argmax = std::move(polished);
  return out;
}

ConePtr restricted_cone(const ConePtr& K, const Vec& x) {
  return make_restricted(K, x);
}

namespace {

struct FeasibilityResult {
  Vec point;
  double residual = 0.0;
  bool feasible = false;
};

FeasibilityResult feasibility_stage(const Mat& G, const Vec& b,
                                    const ConePtr& K,
                                    const SolverOptions& opts) {
  FeasibilityResult out;
  const int n = static_cast<int>(G.cols());
  const double bn = b.norm();
  if (bn == 0.0) {
    out.point = Vec::Zero(n);
    out.feasible = true;
    return out;
  }
  const double sigma = sigma_max_power(G);
  if (sigma == 0.0) {
    out.point = Vec::Zero(n);
    out.residual = bn;
    out.feasible = false;
    return out;
  }
  const double eta = 1.0 / (sigma * sigma);
  Vec mu = Vec::Zero(n);
  Vec r = -b;
  double res = bn;
  double window_res = res;
  int since = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    mu = K->project(mu - eta * (G.transpose() * r));
    r = G * mu - b;
    res = r.norm();
    if (res <= opts.dist_tol * (1.0 + bn)) break;
    if (++since >= 50) {
      since = 0;
      if (window_res - res <= 1e-10 * (1.0 + res)) break;  // stalled
      window_res = res;
    }
  }
  out.point = std::move(mu);
  out.residual = res;
  out.feasible = res <= opts.dist_tol * (1.0 + bn);
  return out;
}

}  // namespace

CpOutcome solve_conic_program(const Vec& x, const Mat& G, const Vec& b,
                              const ConePtr& K, RngStream& stream,
                              const SolverOptions& opts) {
  const int n = static_cast<int>(G.cols());
  if (!K || K->dim() != n || x.size() != n || b.size() != G.rows())
    throw std::invalid_argument("conic program: dimension mismatch");
  if (std::abs(x.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("conic program: objective must be unit");

  CpOutcome out;

  FeasibilityResult feas = feasibility_stage(G, b, K, opts);
  if (!feas.feasible) {
    out.kind = CpKind::kInfeasible;
    return out;
  }

  Mat N = null_space_basis(G);
  if (N.cols() > 0) {
    SetPtr null_set =
        set_from_cone(make_subspace_prevalidated(std::move(N), n));
    SetPtr kx = set_from_cone(restricted_cone(K, x));
    IntersectionVerdict v =
        detect_nontrivial_intersection(*null_set, *kx, n, opts.detect, stream);
    if (v.nontrivial && x.dot(v.witness) >= opts.dist_tol) {
      out.kind = CpKind::kUnbounded;
      out.certificate = v.witness;
      return out;
    }
  }

  SetPtr cone_set = set_from_cone(K);
  SetPtr affine = make_affine(G, b);
  double radius = 1.0;
  int interior_streak = 0;
  SupportValue sv;
  for (int round = 0; round < 40; ++round) {
    std::vector<SetPtr> sets{cone_set, affine, make_ball(n, radius)};
    sv = support_function(x, sets, opts);
    if (sv.argmax.norm() <= radius * (1.0 - 1e-3)) {
      if (++interior_streak >= 2) {
        out.kind = CpKind::kBounded;
        out.value = sv.value;
        out.certificate = sv.argmax;
        out.converged = sv.converged;
        return out;
      }
    } else {
      interior_streak = 0;
    }
    radius *= 2.0;
  }
  out.kind = CpKind::kUnbounded;
  out.suspected_unbounded = true;
  out.converged = false;
  return out;
}

double logistic_loglik(const Mat& X, const Vec& y, const Vec& beta) {
  if (X.rows() != y.size() || X.cols() != beta.size())
    throw std::invalid_argument("logistic: dimension mismatch");
  double ll = 0.0;
  for (int i = 0; i < X.rows(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0)
      throw std::invalid_argument("logistic: labels must be +1 or -1");
    const double z = -y[i] * X.row(i).dot(beta);
    // softplus(z) = max(z,0) + log1p(exp(-|z|)), overflow-safe
    ll -= std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  }
  return ll;
}

MleExistence logistic_mle_exists(const Mat& X, const Vec& y, const ConePtr& K,
                                 RngStream& stream, const DetectOpts& opts) {
  if (X.rows() != y.size())
    throw std::invalid_argument("logistic: row/label mismatch");
  if (!K || K->dim() != X.cols())
    throw std::invalid_argument("logistic: cone/column mismatch");
  for (int i = 0; i < y.size(); ++i)
    if (y[i] != 1.0 && y[i] != -1.0)
      throw std::invalid_argument("logistic: labels must be +1 or -1");
  const int m = static_cast<int>(X.rows());
  Mat D = y.asDiagonal() * X;
  SetPtr orthant = set_from_cone(make_orthant(m));
  SetPtr image = make_image_cone(std::move(D), K);
  IntersectionVerdict v =
      detect_nontrivial_intersection(*orthant, *image, m, opts, stream);
  MleExistence out;
  out.exists = !v.nontrivial;
  out.rho = v.rho;
  out.detector_converged =
      v.exact || v.nontrivial || (1.0 - v.rho > 10.0 * opts.rho_tol);
  return out;
}

}  // namespace conelab
