#include "conelab/phase.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include "conelab/cones.hpp"
#include "conelab/convex_sets.hpp"
#include "conelab/stats.hpp"
#include "conelab/util.hpp"
#include "conelab/version.hpp"
#include "json.hpp"

namespace conelab {

namespace {

using nlohmann::json;

[[noreturn]] void cfg_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

long long get_int(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    cfg_error("'" + key + "' must be an integer");
  return v.get<long long>();
}

double get_num(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) cfg_error("'" + key + "' must be a number");
  return v.get<double>();
}

std::string get_str(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_string()) cfg_error("'" + key + "' must be a string");
  return v.get<std::string>();
}

bool is_grid_experiment(Experiment e) {
  switch (e) {
    case Experiment::kKinematic:
    case Experiment::kPreimage:
    case Experiment::kEscape:
    case Experiment::kLogistic:
    case Experiment::kCp:
      return true;
    default:
      return false;
  }
}

// Work-stealing loop over [0, total); deterministic output requires only that
// every index is evaluated, since each index writes its own slot.
void parallel_for(long long total, int workers,
                  const std::function<void(long long)>& fn) {
  if (total <= 0) return;
  long long w = std::min<long long>(std::max(workers, 1), total);
  if (w == 1) {
    for (long long i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(w));
  for (long long t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        long long i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= total) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          next.store(total, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  size_t h = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

void require_dim(const Cone& K, int expect, const char* what) {
  if (K.dim() != expect)
    cfg_error(std::string(what) + " resolves to dimension " +
              std::to_string(K.dim()) + ", expected " + std::to_string(expect));
}

RngStream trial_stream(const ExperimentConfig& cfg, std::uint64_t grid_index,
                       std::uint64_t trial) {
  std::uint64_t tag =
      tags::kExperimentBase + static_cast<std::uint64_t>(cfg.experiment);
  return derive_stream(cfg.seed, tag, grid_index).substream(trial);
}

std::vector<DimBinding> bindings(const ExperimentConfig& cfg, long long control,
                                 int m_cur) {
  return {{"n", cfg.n},
          {"m", m_cur},
          {"c", static_cast<int>(control)},
          {"l", cfg.l},
          {"k", cfg.k}};
}

Vec unit_gaussian(RngStream& st, int k) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec x = gaussian_vector(st, k);
    double nn = x.norm();
    if (nn > 1e-12) return x / nn;
  }
  throw std::runtime_error("direction draws degenerate");
}

// Null space of the dropped rows, stored through an orthonormal basis Q of
// their row space: P(v) = v - Q Q^T v. Kept thin because the dropped row
// count is far below the ambient dimension in the regimes studied.
class RowKernelSet final : public ConvexSet {
 public:
  RowKernelSet(Mat q, int d) : q_(std::move(q)), d_(d) {}
  int dim() const override { return d_; }
  Vec project(const Vec& v) const override {
    if (q_.cols() == 0) return v;
    return v - q_ * (q_.transpose() * v);
  }
  bool is_cone() const override { return true; }

 private:
  Mat q_;
  int d_;
};

bool detector_unresolved(const IntersectionVerdict& v, const DetectOpts& o) {
  if (v.exact || v.nontrivial) return false;
  // Trivial verdict, but the contraction factor hugged 1: the power iteration
  // could not separate "no common ray" from "common ray beyond the budget".
  return (1.0 - v.rho) <= 10.0 * o.rho_tol;
}

std::uint8_t pack_binary(bool success, bool flag) {
  return static_cast<std::uint8_t>((success ? 1 : 0) | (flag ? 2 : 0));
}

std::uint8_t eval_binary_trial(const ExperimentConfig& cfg, long long gi,
                               long long t) {
  RngStream st = trial_stream(cfg, static_cast<std::uint64_t>(gi),
                              static_cast<std::uint64_t>(t));
  const long long c = cfg.grid[static_cast<size_t>(gi)];
  switch (cfg.experiment) {
    case Experiment::kKinematic: {
      int m_cur = cfg.axis == "m" ? static_cast<int>(c) : cfg.m;
      auto dims = bindings(cfg, c, m_cur);
      ConePtr K = parse_cone(cfg.cone_K, &st, dims);
      require_dim(*K, cfg.n, "cone_K");
      ConePtr L = parse_cone(cfg.cone_L, &st, dims);
      require_dim(*L, m_cur, "cone_L");
      Mat G = gaussian_matrix(st, m_cur, cfg.n);
      SetPtr A = set_from_cone(L);
      SetPtr B = make_image_cone(std::move(G), K, cfg.image);
      auto v = detect_nontrivial_intersection(*A, *B, m_cur, cfg.detect, st);
      return pack_binary(v.nontrivial, detector_unresolved(v, cfg.detect));
    }
    case Experiment::kPreimage: {
      int m_cur = cfg.axis == "m" ? static_cast<int>(c) : cfg.m;
      auto dims = bindings(cfg, c, m_cur);
      ConePtr K = parse_cone(cfg.cone_K, &st, dims);
      require_dim(*K, cfg.n, "cone_K");
      ConePtr L = parse_cone(cfg.cone_L, &st, dims);
      require_dim(*L, m_cur, "cone_L");
      Mat G = gaussian_matrix(st, m_cur, cfg.n);
      SetPtr A = set_from_cone(K);
      SetPtr B = preimage_oracle(G, L);
      auto v = detect_nontrivial_intersection(*A, *B, cfg.n, cfg.detect, st);
      return pack_binary(v.nontrivial, detector_unresolved(v, cfg.detect));
    }
    case Experiment::kEscape: {
      int rows = cfg.n - static_cast<int>(c);
      auto dims = bindings(cfg, c, rows);
      ConePtr K = parse_cone(cfg.cone_K, &st, dims);
      require_dim(*K, cfg.n, "cone_K");
      Mat G = gaussian_matrix(st, rows, cfg.n);
      Mat W = null_space_basis(G);
      ConePtr S = W.cols() == 0 ? make_trivial(cfg.n)
                                : make_subspace_prevalidated(std::move(W), cfg.n);
      SetPtr A = set_from_cone(K);
      SetPtr B = set_from_cone(S);
      auto v = detect_nontrivial_intersection(*A, *B, cfg.n, cfg.detect, st);
      return pack_binary(v.nontrivial, detector_unresolved(v, cfg.detect));
    }
    case Experiment::kLogistic: {
      int m_cur = static_cast<int>(c);
      auto dims = bindings(cfg, c, m_cur);
      ConePtr K = parse_cone(cfg.cone_K, &st, dims);
      require_dim(*K, cfg.n, "cone_K");
      Mat X = gaussian_matrix(st, m_cur, cfg.n);
      Vec y(m_cur);
      for (int i = 0; i < m_cur; ++i) y(i) = (st.next_u64() & 1u) ? 1.0 : -1.0;
      auto r = logistic_mle_exists(X, y, K, st, cfg.detect);
      return pack_binary(r.exists, !r.detector_converged);
    }
    default:
      throw std::logic_error("eval_binary_trial: not a binary experiment");
  }
}

std::uint8_t eval_cp_trial(const ExperimentConfig& cfg, long long gi,
                           long long t, const Vec& x_obj) {
  RngStream st = trial_stream(cfg, static_cast<std::uint64_t>(gi),
                              static_cast<std::uint64_t>(t));
  const long long c = cfg.grid[static_cast<size_t>(gi)];
  int m_cur = static_cast<int>(c);
  auto dims = bindings(cfg, c, m_cur);
  ConePtr K = parse_cone(cfg.cone_K, &st, dims);
  require_dim(*K, cfg.n, "cone_K");
  Mat G = gaussian_matrix(st, m_cur, cfg.n);
  Vec b = Vec::Zero(m_cur);
  if (cfg.b_mode == "unit") b(0) = 1.0;
  CpOutcome out = solve_conic_program(x_obj, G, b, K, st, cfg.solver);
  std::uint8_t code = out.kind == CpKind::kInfeasible ? 0
                      : out.kind == CpKind::kBounded  ? 1
                                                      : 2;
  if (!out.converged) code |= 8;
  return code;
}

double stat_dim_of_cfg_cone(const ExperimentConfig& cfg) {
  RngStream bs = derive_stream(cfg.seed, tags::kConeBasis, 0);
  auto dims = bindings(cfg, 0, cfg.m);
  ConePtr K = parse_cone(cfg.cone_K, &bs, dims);
  require_dim(*K, cfg.n, "cone_K");
  if (auto closed = stat_dim_closed(*K)) return *closed;
  return stat_dim_mc(*K, 20000, derive_stream(cfg.seed, tags::kStatDim, 0)).mean;
}

struct ShadowTrial {
  std::vector<double> ratios;
};

// One randomized instance: draw the map, freeze the kept/dropped row split,
// then probe n_dirs random unit shadows. The shadow support value reduces to
// the norm of the projection of G_top^T x onto (cone intersect kernel), via
// the cone support identity sup_{mu in C, |mu|<=1} <g,mu> = |P_C g|.
ShadowTrial eval_shadow_trial(const ExperimentConfig& cfg, long long t,
                              double target) {
  RngStream st = trial_stream(cfg, 0, static_cast<std::uint64_t>(t));
  auto dims = bindings(cfg, 0, cfg.m);
  ConePtr K = parse_cone(cfg.cone_K, &st, dims);
  require_dim(*K, cfg.n, "cone_K");
  Mat G = gaussian_matrix(st, cfg.m, cfg.n);
  int drop = cfg.m - cfg.l;
  Mat Q = drop > 0 ? orthonormal_span(G.bottomRows(drop).transpose())
                   : Mat(cfg.n, 0);
  auto kernel = std::make_shared<RowKernelSet>(std::move(Q), cfg.n);
  SetPtr cone_set = set_from_cone(K);
  std::vector<SetPtr> pair = {cone_set, kernel};
  ShadowTrial out;
  out.ratios.reserve(static_cast<size_t>(cfg.n_dirs));
  for (int j = 0; j < cfg.n_dirs; ++j) {
    Vec x = unit_gaussian(st, cfg.k);
    Vec cvec = G.topRows(cfg.k).transpose() * x;
    double h = dykstra(pair, cvec, cfg.solver).point.norm();
    out.ratios.push_back(h / target);
  }
  return out;
}

double eval_support_trial(const ExperimentConfig& cfg, long long t) {
  RngStream st = trial_stream(cfg, 0, static_cast<std::uint64_t>(t));
  auto dims = bindings(cfg, 0, cfg.m);
  ConePtr K = parse_cone(cfg.cone_K, &st, dims);
  require_dim(*K, cfg.n, "cone_K");
  Mat G = gaussian_matrix(st, cfg.m, cfg.n);
  int drop = cfg.m - cfg.l;
  Mat Q = drop > 0 ? orthonormal_span(G.bottomRows(drop).transpose())
                   : Mat(cfg.n, 0);
  auto kernel = std::make_shared<RowKernelSet>(std::move(Q), cfg.n);
  std::vector<SetPtr> pair = {set_from_cone(K), kernel};
  Vec cvec = G.row(0).transpose();
  double h = dykstra(pair, cvec, cfg.solver).point.norm();
  return h * h;
}

void run_grid(const ExperimentConfig& cfg, int workers, PhaseResult& res) {
  const bool is_cp = cfg.experiment == Experiment::kCp;
  const long long n_grid = static_cast<long long>(cfg.grid.size());
  const long long T = cfg.trials;
  std::vector<std::uint8_t> out(static_cast<size_t>(n_grid * T), 0);
  Vec x_obj;
  if (is_cp) {
    x_obj = parse_vector(cfg.x_spec, cfg.n);
    double nn = x_obj.norm();
    if (nn <= 0) cfg_error("x_spec must be a nonzero vector");
    x_obj /= nn;
  }
  parallel_for(n_grid * T, workers, [&](long long idx) {
    long long gi = idx / T;
    long long t = idx % T;
    out[static_cast<size_t>(idx)] =
        is_cp ? eval_cp_trial(cfg, gi, t, x_obj) : eval_binary_trial(cfg, gi, t);
  });

  res.table.columns = {"control", "trials", "successes",
                       "p_hat",   "ci_lo",  "ci_hi"};
  if (is_cp) {
    res.table.columns.push_back("p_infeasible");
    res.table.columns.push_back("p_bounded");
    res.table.columns.push_back("p_unbounded");
  }
  std::vector<double> controls, phats;
  std::vector<std::pair<double, double>> cis;
  bool any_flag = false;
  for (long long gi = 0; gi < n_grid; ++gi) {
    long long succ = 0, n_inf = 0, n_bnd = 0, n_unb = 0;
    for (long long t = 0; t < T; ++t) {
      std::uint8_t code = out[static_cast<size_t>(gi * T + t)];
      if (is_cp) {
        int kind = code & 3;
        n_inf += kind == 0;
        n_bnd += kind == 1;
        n_unb += kind == 2;
        any_flag = any_flag || (code & 8) != 0;
      } else {
        succ += code & 1;
        any_flag = any_flag || (code & 2) != 0;
      }
    }
    if (is_cp) succ = n_bnd;
    double p = static_cast<double>(succ) / static_cast<double>(T);
    auto ci = wilson_ci(succ, T);
    std::vector<double> row = {static_cast<double>(cfg.grid[static_cast<size_t>(gi)]),
                               static_cast<double>(T),
                               static_cast<double>(succ),
                               p,
                               ci.first,
                               ci.second};
    if (is_cp) {
      row.push_back(static_cast<double>(n_inf) / static_cast<double>(T));
      row.push_back(static_cast<double>(n_bnd) / static_cast<double>(T));
      row.push_back(static_cast<double>(n_unb) / static_cast<double>(T));
    }
    res.table.rows.push_back(std::move(row));
    controls.push_back(static_cast<double>(cfg.grid[static_cast<size_t>(gi)]));
    phats.push_back(p);
    cis.push_back(ci);
  }
  res.fit = fit_transition(controls, phats, cis, T);
  res.fit_applicable = true;
  res.all_converged = !any_flag;
  res.table.trailers.push_back({{"theta0", fmt_g(res.fit.theta0)},
                                {"slope", fmt_g(res.fit.slope)},
                                {"fit_ok", res.fit.ok ? "true" : "false"}});
}

void run_shadow(const ExperimentConfig& cfg, int workers, PhaseResult& res) {
  double delta = stat_dim_of_cfg_cone(cfg);
  double drop = static_cast<double>(cfg.m - cfg.l);
  if (drop > (1.0 - cfg.tau) * delta)
    cfg_error("dropped row count " + fmt_g(drop) + " exceeds the (1 - tau) * " +
              fmt_g(delta) + " budget");
  double target_sq = delta - drop;
  if (target_sq <= 0) cfg_error("target radius is not positive");
  double target = std::sqrt(target_sq);

  std::vector<ShadowTrial> trials(static_cast<size_t>(cfg.trials));
  parallel_for(cfg.trials, workers, [&](long long i) {
    trials[static_cast<size_t>(i)] = eval_shadow_trial(cfg, i, target);
  });

  res.table.columns = {"trial",     "n_dirs",       "in_band",  "frac",
                       "ratio_min", "ratio_median", "ratio_max"};
  std::vector<double> all_ratios;
  long long in_band_total = 0;
  for (long long i = 0; i < cfg.trials; ++i) {
    const auto& r = trials[static_cast<size_t>(i)].ratios;
    long long in_band = 0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : r) {
      in_band += std::abs(v - 1.0) <= cfg.epsilon;
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      all_ratios.push_back(v);
    }
    in_band_total += in_band;
    res.table.rows.push_back({static_cast<double>(i),
                              static_cast<double>(cfg.n_dirs),
                              static_cast<double>(in_band),
                              static_cast<double>(in_band) / cfg.n_dirs,
                              mn,
                              median_of(r),
                              mx});
  }
  double coverage = static_cast<double>(in_band_total) /
                    (static_cast<double>(cfg.trials) * cfg.n_dirs);
  res.table.trailers.push_back({{"coverage", fmt_g(coverage)},
                                {"target_radius", fmt_g(target)},
                                {"epsilon", fmt_g(cfg.epsilon)},
                                {"median_ratio", fmt_g(median_of(all_ratios))}});
}

void run_support(const ExperimentConfig& cfg, int workers, PhaseResult& res) {
  double delta = stat_dim_of_cfg_cone(cfg);
  double target = delta - static_cast<double>(cfg.m - cfg.l);
  std::vector<double> h2(static_cast<size_t>(cfg.trials), 0.0);
  parallel_for(cfg.trials, workers, [&](long long i) {
    h2[static_cast<size_t>(i)] = eval_support_trial(cfg, i);
  });
  res.table.columns = {"trial", "h2"};
  for (long long i = 0; i < cfg.trials; ++i)
    res.table.rows.push_back({static_cast<double>(i), h2[static_cast<size_t>(i)]});
  double med = median_of(h2);
  res.table.trailers.push_back({{"median_h2", fmt_g(med)},
                                {"target", fmt_g(target)},
                                {"abs_dev", fmt_g(std::abs(med - target))}});
}

// Parse-time sanity pass over the cone grammar: materialize each spec once at
// representative grid corners so malformed specs and dimension mismatches
// surface before any trial budget is spent.
void validate_cone_specs(const ExperimentConfig& cfg) {
  std::vector<long long> probes;
  if (is_grid_experiment(cfg.experiment)) {
    probes.push_back(cfg.grid.front());
    if (cfg.grid.back() != cfg.grid.front()) probes.push_back(cfg.grid.back());
  } else {
    probes.push_back(0);
  }
  for (long long c : probes) {
    RngStream scratch = derive_stream(cfg.seed, tags::kConeBasis, 0);
    int m_cur = cfg.m;
    if (cfg.experiment == Experiment::kEscape)
      m_cur = cfg.n - static_cast<int>(c);
    else if (cfg.axis == "m" || cfg.experiment == Experiment::kLogistic ||
             cfg.experiment == Experiment::kCp)
      m_cur = static_cast<int>(c);
    auto dims = bindings(cfg, c, m_cur);
    ConePtr K = parse_cone(cfg.cone_K, &scratch, dims);
    require_dim(*K, cfg.n, "cone_K");
    if (!cfg.cone_L.empty()) {
      ConePtr L = parse_cone(cfg.cone_L, &scratch, dims);
      require_dim(*L, m_cur, "cone_L");
    }
  }
}

}  // namespace

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kKinematic:
      return "kinematic";
    case Experiment::kPreimage:
      return "preimage";
    case Experiment::kEscape:
      return "escape";
    case Experiment::kLogistic:
      return "logistic";
    case Experiment::kCp:
      return "cp";
    case Experiment::kLocalDm:
      return "local-dm";
    case Experiment::kSupportConc:
      return "support-conc";
  }
  return "unknown";
}

std::optional<Experiment> experiment_from_name(const std::string& name) {
  static const std::pair<const char*, Experiment> table[] = {
      {"kinematic", Experiment::kKinematic},
      {"preimage", Experiment::kPreimage},
      {"escape", Experiment::kEscape},
      {"logistic", Experiment::kLogistic},
      {"cp", Experiment::kCp},
      {"local-dm", Experiment::kLocalDm},
      {"support-conc", Experiment::kSupportConc},
  };
  for (const auto& [k, v] : table)
    if (name == k) return v;
  return std::nullopt;
}

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         std::optional<Experiment> forced) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    cfg_error(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) cfg_error("top level must be a JSON object");

  Experiment exp;
  if (j.contains("experiment")) {
    std::string name = get_str(j, "experiment");
    auto e = experiment_from_name(name);
    if (!e) cfg_error("unknown experiment '" + name + "'");
    if (forced && *forced != *e)
      cfg_error("experiment '" + name + "' does not match the subcommand '" +
                experiment_name(*forced) + "'");
    exp = *e;
  } else if (forced) {
    exp = *forced;
  } else {
    cfg_error("missing 'experiment'");
  }

  ExperimentConfig cfg;
  cfg.experiment = exp;

  std::set<std::string> allowed = {
      "experiment",     "cone_K",        "n",
      "trials",         "seed",          "det_starts",
      "det_max_iters",  "det_rho_tol",   "det_dist_tol",
      "solver_max_iters", "solver_dykstra_cycles", "solver_tol",
      "solver_kkt_tol", "solver_dist_tol", "image_max_iters",
      "image_tol"};
  std::set<std::string> required = {"cone_K", "n", "trials", "seed"};
  switch (exp) {
    case Experiment::kKinematic:
    case Experiment::kPreimage:
      allowed.insert({"cone_L", "m", "axis", "grid"});
      required.insert("grid");
      break;
    case Experiment::kEscape:
    case Experiment::kLogistic:
      allowed.insert({"axis", "grid"});
      required.insert("grid");
      break;
    case Experiment::kCp:
      allowed.insert({"axis", "grid", "x_spec", "b_mode"});
      required.insert("grid");
      break;
    case Experiment::kLocalDm:
      allowed.insert({"m", "l", "k", "epsilon", "tau", "n_dirs"});
      required.insert({"m", "l", "k"});
      break;
    case Experiment::kSupportConc:
      allowed.insert({"m", "l"});
      required.insert({"m", "l"});
      break;
  }
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      cfg_error("unknown key '" + item.key() + "' for experiment '" +
                std::string(experiment_name(exp)) + "'");

  // Axis: which quantity the grid sweeps.
  std::set<std::string> axis_allowed;
  std::string axis_default;
  switch (exp) {
    case Experiment::kKinematic:
      axis_allowed = {"l", "m", "k"};
      axis_default = "l";
      break;
    case Experiment::kPreimage:
      axis_allowed = {"m", "k"};
      axis_default = "m";
      break;
    case Experiment::kEscape:
      axis_allowed = {"l"};
      axis_default = "l";
      break;
    case Experiment::kLogistic:
    case Experiment::kCp:
      axis_allowed = {"m"};
      axis_default = "m";
      break;
    default:
      break;
  }
  if (j.contains("axis")) {
    cfg.axis = get_str(j, "axis");
    if (!axis_allowed.count(cfg.axis))
      cfg_error("axis '" + cfg.axis + "' is not valid for experiment '" +
                std::string(experiment_name(exp)) + "'");
  } else {
    cfg.axis = axis_default;
  }

  bool m_swept = (exp == Experiment::kKinematic || exp == Experiment::kPreimage)
                     ? cfg.axis == "m"
                     : (exp == Experiment::kLogistic || exp == Experiment::kCp);
  if ((exp == Experiment::kKinematic || exp == Experiment::kPreimage)) {
    if (m_swept && j.contains("m"))
      cfg_error("'m' is swept by the grid; remove the fixed value");
    if (!m_swept) required.insert("m");
  }
  if (exp == Experiment::kKinematic && cfg.axis != "l")
    required.insert("cone_L");

  for (const auto& key : required)
    if (!j.contains(key)) cfg_error("missing required key '" + key + "'");

  cfg.cone_K = get_str(j, "cone_K");
  if (cfg.cone_K.empty()) cfg_error("'cone_K' must be nonempty");
  long long n_ll = get_int(j, "n");
  if (n_ll < 1 || n_ll > 100000) cfg_error("'n' must be in [1, 100000]");
  cfg.n = static_cast<int>(n_ll);
  cfg.trials = get_int(j, "trials");
  if (cfg.trials < 20) cfg_error("'trials' must be >= 20");
  {
    const auto& sv = j.at("seed");
    if (sv.is_number_unsigned()) {
      cfg.seed = sv.get<std::uint64_t>();
    } else if (sv.is_number_integer() && sv.get<long long>() >= 0) {
      cfg.seed = static_cast<std::uint64_t>(sv.get<long long>());
    } else {
      cfg_error("'seed' must be a nonnegative integer");
    }
  }
  if (j.contains("m")) {
    long long m_ll = get_int(j, "m");
    if (m_ll < 1 || m_ll > 100000) cfg_error("'m' must be in [1, 100000]");
    cfg.m = static_cast<int>(m_ll);
  }

  if (required.count("grid") != 0u) {
    const auto& g = j.at("grid");
    if (!g.is_array() || g.size() < 2)
      cfg_error("'grid' must be an array of at least 2 control values");
    for (const auto& v : g) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        cfg_error("'grid' entries must be integers");
      long long c = v.get<long long>();
      if (std::llabs(c) > std::numeric_limits<int>::max())
        cfg_error("'grid' entry out of range");
      cfg.grid.push_back(c);
    }
    for (size_t i = 1; i < cfg.grid.size(); ++i)
      if (cfg.grid[i] <= cfg.grid[i - 1])
        cfg_error("'grid' must be strictly increasing");
    long long lo = cfg.grid.front(), hi = cfg.grid.back();
    switch (exp) {
      case Experiment::kKinematic:
        if (cfg.axis == "l" && (lo < 0 || hi > cfg.m))
          cfg_error("'grid' must stay within [0, m] when sweeping l");
        if (cfg.axis == "m" && lo < 1)
          cfg_error("'grid' must be >= 1 when sweeping m");
        if (cfg.axis == "k" && lo < 0) cfg_error("'grid' must be >= 0");
        break;
      case Experiment::kPreimage:
        if (cfg.axis == "m" && lo < 1)
          cfg_error("'grid' must be >= 1 when sweeping m");
        if (cfg.axis == "k" && lo < 0) cfg_error("'grid' must be >= 0");
        break;
      case Experiment::kEscape:
        if (lo < 0 || hi > cfg.n)
          cfg_error("'grid' must stay within [0, n] for the escape sweep");
        break;
      case Experiment::kLogistic:
      case Experiment::kCp:
        if (lo < 1) cfg_error("'grid' must be >= 1 when sweeping m");
        break;
      default:
        break;
    }
  }

  if (exp == Experiment::kKinematic || exp == Experiment::kPreimage) {
    if (j.contains("cone_L")) {
      cfg.cone_L = get_str(j, "cone_L");
      if (cfg.cone_L.empty()) cfg_error("'cone_L' must be nonempty");
    } else if (exp == Experiment::kKinematic) {
      cfg.cone_L = "subspace:m:c";  // random l-dim subspace of the image space
    } else {
      cfg.cone_L = "trivial:m";  // kernel experiment by default
    }
  }

  if (exp == Experiment::kCp) {
    if (j.contains("x_spec")) cfg.x_spec = get_str(j, "x_spec");
    if (j.contains("b_mode")) cfg.b_mode = get_str(j, "b_mode");
    if (cfg.b_mode != "zero" && cfg.b_mode != "unit")
      cfg_error("'b_mode' must be \"zero\" or \"unit\"");
    Vec probe = parse_vector(cfg.x_spec, cfg.n);
    if (probe.norm() <= 0) cfg_error("'x_spec' must be a nonzero vector");
  }

  if (exp == Experiment::kLocalDm || exp == Experiment::kSupportConc) {
    long long l_ll = get_int(j, "l");
    if (l_ll < 1 || l_ll > cfg.m) cfg_error("'l' must be in [1, m]");
    cfg.l = static_cast<int>(l_ll);
  }
  if (exp == Experiment::kLocalDm) {
    long long k_ll = get_int(j, "k");
    if (k_ll < 1 || k_ll > cfg.l) cfg_error("'k' must be in [1, l]");
    cfg.k = static_cast<int>(k_ll);
    if (j.contains("epsilon")) {
      cfg.epsilon = get_num(j, "epsilon");
      if (!(cfg.epsilon > 0 && cfg.epsilon < 1))
        cfg_error("'epsilon' must be in (0, 1)");
    }
    if (j.contains("tau")) {
      cfg.tau = get_num(j, "tau");
      if (!(cfg.tau > 0 && cfg.tau <= 0.5))
        cfg_error("'tau' must be in (0, 0.5]");
    }
    if (j.contains("n_dirs")) {
      long long nd = get_int(j, "n_dirs");
      if (nd < 1 || nd > 100000) cfg_error("'n_dirs' must be in [1, 100000]");
      cfg.n_dirs = static_cast<int>(nd);
    }
  }

  if (j.contains("det_starts")) {
    long long v = get_int(j, "det_starts");
    if (v < 1 || v > 4096) cfg_error("'det_starts' must be in [1, 4096]");
    cfg.detect.starts = static_cast<int>(v);
  }
  if (j.contains("det_max_iters")) {
    long long v = get_int(j, "det_max_iters");
    if (v < 1 || v > 1000000) cfg_error("'det_max_iters' out of range");
    cfg.detect.max_iters = static_cast<int>(v);
  }
  if (j.contains("det_rho_tol")) {
    cfg.detect.rho_tol = get_num(j, "det_rho_tol");
    if (!(cfg.detect.rho_tol > 0 && cfg.detect.rho_tol < 1))
      cfg_error("'det_rho_tol' must be in (0, 1)");
  }
  if (j.contains("det_dist_tol")) {
    cfg.detect.dist_tol = get_num(j, "det_dist_tol");
    if (!(cfg.detect.dist_tol > 0)) cfg_error("'det_dist_tol' must be > 0");
  }
  if (j.contains("solver_max_iters")) {
    long long v = get_int(j, "solver_max_iters");
    if (v < 1 || v > 10000000) cfg_error("'solver_max_iters' out of range");
    cfg.solver.max_iters = static_cast<int>(v);
  }
  if (j.contains("solver_dykstra_cycles")) {
    long long v = get_int(j, "solver_dykstra_cycles");
    if (v < 1 || v > 1000000) cfg_error("'solver_dykstra_cycles' out of range");
    cfg.solver.dykstra_cycles = static_cast<int>(v);
  }
  if (j.contains("solver_tol")) {
    cfg.solver.tol = get_num(j, "solver_tol");
    if (!(cfg.solver.tol > 0)) cfg_error("'solver_tol' must be > 0");
  }
  if (j.contains("solver_kkt_tol")) {
    cfg.solver.kkt_tol = get_num(j, "solver_kkt_tol");
    if (!(cfg.solver.kkt_tol > 0)) cfg_error("'solver_kkt_tol' must be > 0");
  }
  if (j.contains("solver_dist_tol")) {
    cfg.solver.dist_tol = get_num(j, "solver_dist_tol");
    if (!(cfg.solver.dist_tol > 0)) cfg_error("'solver_dist_tol' must be > 0");
  }
  if (j.contains("image_max_iters")) {
    long long v = get_int(j, "image_max_iters");
    if (v < 1 || v > 10000000) cfg_error("'image_max_iters' out of range");
    cfg.image.max_iters = static_cast<int>(v);
  }
  if (j.contains("image_tol")) {
    cfg.image.tol = get_num(j, "image_tol");
    if (!(cfg.image.tol > 0)) cfg_error("'image_tol' must be > 0");
  }
  cfg.solver.detect = cfg.detect;

  validate_cone_specs(cfg);
  return cfg;
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["cone_K"] = cfg.cone_K;
  j["cone_L"] = cfg.cone_L;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["axis"] = cfg.axis;
  j["grid"] = cfg.grid;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["x_spec"] = cfg.x_spec;
  j["b_mode"] = cfg.b_mode;
  j["l"] = cfg.l;
  j["k"] = cfg.k;
  j["n_dirs"] = cfg.n_dirs;
  j["epsilon"] = cfg.epsilon;
  j["tau"] = cfg.tau;
  j["det_starts"] = cfg.detect.starts;
  j["det_max_iters"] = cfg.detect.max_iters;
  j["det_rho_tol"] = cfg.detect.rho_tol;
  j["det_dist_tol"] = cfg.detect.dist_tol;
  j["solver_max_iters"] = cfg.solver.max_iters;
  j["solver_dykstra_cycles"] = cfg.solver.dykstra_cycles;
  j["solver_tol"] = cfg.solver.tol;
  j["solver_kkt_tol"] = cfg.solver.kkt_tol;
  j["solver_dist_tol"] = cfg.solver.dist_tol;
  j["image_max_iters"] = cfg.image.max_iters;
  j["image_tol"] = cfg.image.tol;
  j["version"] = kVersion;
  j["rng"] = kRngAlgorithmId;
  return j.dump();
}

std::pair<double, double> wilson_ci(long long successes, long long trials,
                                    double z) {
  if (trials <= 0) return {0.0, 1.0};
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

FitResult fit_transition(const std::vector<double>& controls,
                         const std::vector<double>& p_hats,
                         const std::vector<std::pair<double, double>>& cis,
                         long long trials_per_point) {
  FitResult fit;
  size_t n = controls.size();
  if (n < 2 || p_hats.size() != n || cis.size() != n || trials_per_point <= 0)
    return fit;
  double eps = 1.0 / (2.0 * static_cast<double>(trials_per_point));
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) {
    double p = std::min(std::max(p_hats[i], eps), 1.0 - eps);
    y[i] = std::log(p / (1.0 - p));
  }
  double mc = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mc += controls[i];
    my += y[i];
  }
  mc /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (controls[i] - mc) * (controls[i] - mc);
    sxy += (controls[i] - mc) * (y[i] - my);
  }
  if (sxx <= 0) return fit;
  fit.slope = sxy / sxx;
  double intercept = my - fit.slope * mc;
  if (std::abs(fit.slope) < 1e-12) {
    fit.theta0 = 0.0;
    return fit;  // flat curve: no crossing to report
  }
  fit.theta0 = -intercept / fit.slope;
  fit.ok = fit.slope > 0 && fit.theta0 >= controls.front() &&
           fit.theta0 <= controls.back();
  for (size_t i = 0; i + 1 < n; ++i) {
    // A decrease is disqualifying only when the intervals certify it.
    if (p_hats[i + 1] < p_hats[i] && cis[i].first > cis[i + 1].second)
      fit.ok = false;
  }
  return fit;
}

PhaseResult run_phase(const ExperimentConfig& cfg, int workers) {
  PhaseResult res;
  res.cfg = cfg;
  res.config_sha256 = sha256_hex(canonical_config_json(cfg));
  int wk = workers > 0 ? workers
                       : static_cast<int>(std::thread::hardware_concurrency());
  if (wk < 1) wk = 1;
  switch (cfg.experiment) {
    case Experiment::kLocalDm:
      run_shadow(cfg, wk, res);
      break;
    case Experiment::kSupportConc:
      run_support(cfg, wk, res);
      break;
    default:
      run_grid(cfg, wk, res);
      break;
  }
  return res;
}

std::string to_csv(const PhaseResult& result) {
  std::string s;
  char head[256];
  std::snprintf(head, sizeof head, "# conelab v%s seed=%llu rng=%s config=%s\n",
                kVersion,
                static_cast<unsigned long long>(result.cfg.seed),
                kRngAlgorithmId, result.config_sha256.c_str());
  s += head;
  for (size_t i = 0; i < result.table.columns.size(); ++i) {
    if (i) s += ',';
    s += result.table.columns[i];
  }
  s += '\n';
  for (const auto& row : result.table.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += fmt_g(row[i]);
    }
    s += '\n';
  }
  for (const auto& trailer : result.table.trailers) {
    s += '#';
    for (const auto& kv : trailer) {
      s += ' ';
      s += kv.first;
      s += '=';
      s += kv.second;
    }
    s += '\n';
  }
  return s;
}

}  // namespace conelab
