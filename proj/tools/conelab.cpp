// conelab command line: cone calculus probes, intersection detection,
// conic-program solving, and reproducible phase-transition sweeps.
//
// Exit codes: 0 success, 2 invalid configuration or spec string,
// 3 a --strict run finished without a certified/converged answer.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "conelab/cones.hpp"
#include "conelab/convex_sets.hpp"
#include "conelab/intersect.hpp"
#include "conelab/phase.hpp"
#include "conelab/solver.hpp"
#include "conelab/stats.hpp"
#include "conelab/util.hpp"
#include "conelab/version.hpp"

namespace {

using namespace conelab;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitNotConverged = 3;

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("CONELAB_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    throw std::invalid_argument(
        "config: CONELAB_WORKERS must be an integer in [1, 1024]");
  }
  return 0;  // resolved to hardware concurrency downstream
}

void print_kv(const char* key, double v) {
  std::printf("%s=%.10g\n", key, v);
}
void print_kv(const char* key, const std::string& v) {
  std::printf("%s=%s\n", key, v.c_str());
}
void print_kv(const char* key, bool v) {
  std::printf("%s=%s\n", key, v ? "true" : "false");
}

struct DetectFlags {
  int starts = 16;
  int max_iters = 400;
  double rho_tol = 1e-4;
  double dist_tol = 1e-6;

  void attach(CLI::App* cmd) {
    cmd->add_option("--starts", starts, "Detector restart count")
        ->check(CLI::Range(1, 4096));
    cmd->add_option("--max-iters", max_iters, "Detector iteration budget")
        ->check(CLI::Range(1, 1000000));
    cmd->add_option("--rho-tol", rho_tol,
                    "Accept a ray when 1 - rho falls below this");
    cmd->add_option("--dist-tol", dist_tol,
                    "Witness distance tolerance to both cones");
  }
  DetectOpts to_opts() const {
    DetectOpts o;
    o.starts = starts;
    o.max_iters = max_iters;
    o.rho_tol = rho_tol;
    o.dist_tol = dist_tol;
    return o;
  }
};

int run_stat_dim(const std::string& spec, long long trials,
                 std::uint64_t seed) {
  RngStream basis = derive_stream(seed, tags::kConeBasis, 0);
  ConePtr K = parse_cone(spec, &basis);
  print_kv("cone", K->describe());
  print_kv("dim", static_cast<double>(K->dim()));
  if (auto cf = stat_dim_closed(*K)) print_kv("closed_form", *cf);
  auto est = stat_dim_mc(*K, trials, derive_stream(seed, tags::kStatDim, 0));
  print_kv("estimate", est.mean);
  print_kv("se", est.se);
  print_kv("ci_lo", est.lo);
  print_kv("ci_hi", est.hi);
  print_kv("trials", static_cast<double>(trials));
  return kExitOk;
}

int run_width(const std::string& spec, const std::string& cap_name,
              long long trials, std::uint64_t seed) {
  Cap cap;
  if (cap_name == "ball") {
    cap = Cap::kBall;
  } else if (cap_name == "sphere") {
    cap = Cap::kSphere;
  } else {
    throw std::invalid_argument("config: --cap must be 'ball' or 'sphere'");
  }
  RngStream basis = derive_stream(seed, tags::kConeBasis, 0);
  ConePtr K = parse_cone(spec, &basis);
  print_kv("cone", K->describe());
  print_kv("cap", cap_name);
  auto est = gaussian_width_mc(*K, cap, trials,
                               derive_stream(seed, tags::kWidth, 0));
  print_kv("estimate", est.mean);
  print_kv("se", est.se);
  print_kv("ci_lo", est.lo);
  print_kv("ci_hi", est.hi);
  print_kv("trials", static_cast<double>(trials));
  return kExitOk;
}

int run_intersect(const std::string& spec_a, const std::string& spec_b,
                  std::uint64_t seed, const DetectFlags& flags,
                  bool print_witness, bool strict) {
  RngStream basis = derive_stream(seed, tags::kConeBasis, 0);
  ConePtr A = parse_cone(spec_a, &basis);
  ConePtr B = parse_cone(spec_b, &basis);
  if (A->dim() != B->dim())
    throw std::invalid_argument("config: cones live in different dimensions (" +
                                std::to_string(A->dim()) + " vs " +
                                std::to_string(B->dim()) + ")");
  DetectOpts opts = flags.to_opts();
  RngStream st = derive_stream(seed, tags::kIntersect, 0);
  auto v = detect_nontrivial_intersection(*set_from_cone(A), *set_from_cone(B),
                                          A->dim(), opts, st);
  print_kv("cone_a", A->describe());
  print_kv("cone_b", B->describe());
  print_kv("nontrivial", v.nontrivial);
  print_kv("rho", v.rho);
  print_kv("iterations", static_cast<double>(v.iterations));
  print_kv("exact", v.exact);
  if (print_witness && v.nontrivial) {
    std::string w;
    char buf[64];
    for (int i = 0; i < v.witness.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g", v.witness(i));
      if (i) w += ',';
      w += buf;
    }
    print_kv("witness", w);
  }
  bool unresolved =
      !v.exact && !v.nontrivial && (1.0 - v.rho) <= 10.0 * opts.rho_tol;
  print_kv("resolved", !unresolved);
  if (strict && unresolved) return kExitNotConverged;
  return kExitOk;
}

int run_cp(const std::string& cone_spec, const std::string& x_spec, int rows,
           const std::string& b_mode, std::uint64_t seed, bool strict) {
  if (b_mode != "zero" && b_mode != "unit")
    throw std::invalid_argument("config: --b must be 'zero' or 'unit'");
  RngStream basis = derive_stream(seed, tags::kConeBasis, 0);
  ConePtr K = parse_cone(cone_spec, &basis);
  int n = K->dim();
  Vec x = parse_vector(x_spec, n);
  double nn = x.norm();
  if (nn <= 0) throw std::invalid_argument("config: --x must be nonzero");
  x /= nn;
  RngStream st = derive_stream(seed, tags::kConicProgram, 0);
  Mat G = gaussian_matrix(st, rows, n);
  Vec b = Vec::Zero(rows);
  if (b_mode == "unit") b(0) = 1.0;
  CpOutcome out = solve_conic_program(x, G, b, K, st);
  print_kv("cone", K->describe());
  print_kv("rows", static_cast<double>(rows));
  print_kv("b_mode", b_mode);
  const char* kind = out.kind == CpKind::kInfeasible ? "infeasible"
                     : out.kind == CpKind::kBounded  ? "bounded"
                                                     : "unbounded";
  print_kv("kind", std::string(kind));
  if (out.value) print_kv("value", *out.value);
  print_kv("suspected_unbounded", out.suspected_unbounded);
  print_kv("converged", out.converged);
  if (strict && !out.converged) return kExitNotConverged;
  return kExitOk;
}

int run_logistic(const std::string& cone_spec, int rows, std::uint64_t seed,
                 const DetectFlags& flags, bool strict) {
  RngStream basis = derive_stream(seed, tags::kConeBasis, 0);
  ConePtr K = parse_cone(cone_spec, &basis);
  int n = K->dim();
  RngStream st = derive_stream(seed, tags::kLogistic, 0);
  Mat X = gaussian_matrix(st, rows, n);
  Vec y(rows);
  for (int i = 0; i < rows; ++i) y(i) = (st.next_u64() & 1u) ? 1.0 : -1.0;
  auto r = logistic_mle_exists(X, y, K, st, flags.to_opts());
  print_kv("cone", K->describe());
  print_kv("rows", static_cast<double>(rows));
  print_kv("exists", r.exists);
  print_kv("rho", r.rho);
  print_kv("detector_converged", r.detector_converged);
  if (strict && !r.detector_converged) return kExitNotConverged;
  return kExitOk;
}

int run_phase_cmd(Experiment exp, const std::string& config_path,
                  const std::string& out_path, int workers_flag, bool strict) {
  std::string text = read_text(config_path);
  ExperimentConfig cfg = parse_experiment_config(text, exp);
  int workers = resolve_workers(workers_flag);
  PhaseResult res = run_phase(cfg, workers);
  std::string csv = to_csv(res);
  if (out_path.empty()) {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
      throw std::invalid_argument("config: cannot open '" + out_path +
                                  "' for writing");
    out << csv;
    out.close();
    std::printf("wrote %s (%zu rows)\n", out_path.c_str(),
                res.table.rows.size());
    if (res.fit_applicable) {
      print_kv("theta0", res.fit.theta0);
      print_kv("fit_ok", res.fit.ok);
    }
    print_kv("all_converged", res.all_converged);
  }
  if (strict && !res.all_converged) return kExitNotConverged;
  return kExitOk;
}

bool close_to(double a, double b, double tol) { return std::abs(a - b) <= tol; }

int run_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const char* what) {
    std::printf("%s %s\n", ok ? "ok  " : "FAIL", what);
    if (!ok) ++failures;
  };

  {
    RngStream a = derive_stream(7, 1, 0);
    RngStream b = derive_stream(7, 1, 0);
    bool same = true;
    for (int i = 0; i < 16; ++i) same = same && a.next_u64() == b.next_u64();
    RngStream c = derive_stream(7, 1, 1);
    bool differs = derive_stream(7, 1, 0).next_u64() != c.next_u64();
    check(same && differs, "stream reproducibility and index separation");
  }
  check(close_to(inverse_normal_cdf(0.975), 1.959963985, 1e-8),
        "inverse normal quantile");
  {
    RngStream basis = derive_stream(11, tags::kConeBasis, 0);
    const char* specs[] = {"orthant:5",
                           "soc:5",
                           "circ:5:0.6",
                           "subspace:6:2",
                           "prod:(orthant:2,soc:3)",
                           "polar:(circ:4:0.7)",
                           "restrict:(orthant:4,e1)"};
    RngStream g = derive_stream(11, tags::kStatDim, 1);
    bool all_ok = true;
    for (const char* s : specs) {
      ConePtr K = parse_cone(s, &basis);
      for (int rep = 0; rep < 50; ++rep) {
        Vec v = gaussian_vector(g, K->dim());
        auto parts = moreau_decompose(*K, v);
        double scale = 1.0 + v.norm();
        bool ok = (v - parts.in_cone - parts.in_polar).norm() <= 1e-8 * scale &&
                  std::abs(parts.in_cone.dot(parts.in_polar)) <= 1e-8 * scale &&
                  (K->project(parts.in_cone) - parts.in_cone).norm() <=
                      1e-8 * scale;
        all_ok = all_ok && ok;
      }
    }
    check(all_ok, "orthogonal cone splitting across the catalog");
  }
  {
    RngStream basis = derive_stream(13, tags::kConeBasis, 0);
    ConePtr orth = parse_cone("orthant:3", &basis);
    ConePtr anti = make_negated(orth);
    ConePtr half = make_halfspace(parse_vector("ones", 3));
    RngStream st1 = derive_stream(13, tags::kIntersect, 0);
    auto hit = detect_nontrivial_intersection(*set_from_cone(orth),
                                              *set_from_cone(half), 3, {}, st1);
    RngStream st2 = derive_stream(13, tags::kIntersect, 1);
    auto miss = detect_nontrivial_intersection(*set_from_cone(orth),
                                               *set_from_cone(anti), 3, {}, st2);
    check(hit.nontrivial && !miss.nontrivial, "ray detector sanity");
  }
  {
    bool ok = true;
    ExtReal p = p_inf(1.0, 0.5, 2.0);
    ok = ok && p.is_finite() && close_to(p.value(), 2.0, 1e-12);
    ExtReal q = q_inf(2.0, 1.0);
    ok = ok && q.is_finite() && close_to(q.value(), std::sqrt(3.0), 1e-12);
    ExtReal neg = p_inf(3.0, 0.5, 2.0);
    ok = ok && !neg.is_finite();
    check(ok, "restricted infimum closed forms");
  }
  {
    const char* config =
        "{\"experiment\":\"escape\",\"cone_K\":\"orthant:8\",\"n\":8,"
        "\"grid\":[2,6],\"trials\":20,\"seed\":5}";
    ExperimentConfig cfg = parse_experiment_config(config);
    std::string one = to_csv(run_phase(cfg, 1));
    std::string two = to_csv(run_phase(cfg, 2));
    check(!one.empty() && one == two, "sweep output worker invariance");
  }

  if (failures == 0) {
    std::printf("selftest ok\n");
    return kExitOk;
  }
  std::printf("selftest failed (%d)\n", failures);
  return kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conelab: numerical laboratory for convex cone geometry",
               "conelab"};
  app.set_version_flag("--version", std::string("conelab v") + kVersion +
                                        " rng=" + kRngAlgorithmId);
  app.require_subcommand(1);

  // stat-dim
  std::string sd_cone;
  long long sd_trials = 20000;
  std::uint64_t sd_seed = 1;
  auto* sd = app.add_subcommand(
      "stat-dim", "Estimate the statistical dimension of a cone");
  sd->add_option("--cone", sd_cone, "Cone spec, e.g. orthant:8 or soc:5")
      ->required();
  sd->add_option("--trials", sd_trials, "Monte Carlo sample count")
      ->check(CLI::Range(static_cast<long long>(1), static_cast<long long>(100000000)));
  sd->add_option("--seed", sd_seed, "Master seed");

  // width
  std::string w_cone, w_cap = "ball";
  long long w_trials = 20000;
  std::uint64_t w_seed = 1;
  auto* wd = app.add_subcommand(
      "width", "Estimate the Gaussian width of a capped cone");
  wd->add_option("--cone", w_cone, "Cone spec")->required();
  wd->add_option("--cap", w_cap, "'ball' (unit-ball cap) or 'sphere'");
  wd->add_option("--trials", w_trials, "Monte Carlo sample count")
      ->check(CLI::Range(static_cast<long long>(1), static_cast<long long>(100000000)));
  wd->add_option("--seed", w_seed, "Master seed");

  // intersect
  std::string ix_a, ix_b;
  std::uint64_t ix_seed = 1;
  bool ix_witness = false, ix_strict = false;
  DetectFlags ix_flags;
  auto* ix = app.add_subcommand(
      "intersect", "Decide whether two cones share a nonzero ray");
  ix->add_option("--cone-a", ix_a, "First cone spec")->required();
  ix->add_option("--cone-b", ix_b, "Second cone spec")->required();
  ix->add_option("--seed", ix_seed, "Master seed");
  ix_flags.attach(ix);
  ix->add_flag("--print-witness", ix_witness, "Print the witness ray");
  ix->add_flag("--strict", ix_strict,
               "Exit 3 when the verdict is not resolved");

  // cp
  std::string cp_cone, cp_x = "e1", cp_b = "zero";
  int cp_rows = 0;
  std::uint64_t cp_seed = 1;
  bool cp_strict = false;
  auto* cp = app.add_subcommand(
      "cp", "Solve sup <x,mu> s.t. G mu = b, mu in K for a random G");
  cp->add_option("--cone", cp_cone, "Cone spec for K")->required();
  cp->add_option("--x", cp_x, "Objective vector spec (normalized)");
  cp->add_option("--rows", cp_rows, "Rows of the random map G")
      ->required()
      ->check(CLI::Range(1, 100000));
  cp->add_option("--b", cp_b, "'zero' (homogeneous) or 'unit' (b = e1)");
  cp->add_option("--seed", cp_seed, "Master seed");
  cp->add_flag("--strict", cp_strict, "Exit 3 when the solver did not converge");

  // logistic-exists
  std::string lg_cone;
  int lg_rows = 0;
  std::uint64_t lg_seed = 1;
  bool lg_strict = false;
  DetectFlags lg_flags;
  auto* lg = app.add_subcommand(
      "logistic-exists",
      "Decide existence of the cone-constrained logistic MLE on random data");
  lg->add_option("--cone", lg_cone, "Parameter cone spec")->required();
  lg->add_option("--rows", lg_rows, "Sample count (rows of X)")
      ->required()
      ->check(CLI::Range(1, 100000));
  lg->add_option("--seed", lg_seed, "Master seed");
  lg_flags.attach(lg);
  lg->add_flag("--strict", lg_strict,
               "Exit 3 when the detector did not resolve");

  // phase
  auto* ph = app.add_subcommand(
      "phase", "Run a reproducible Monte Carlo sweep and emit CSV");
  ph->require_subcommand(1);
  struct PhaseArgs {
    std::string config;
    std::string out;
    int workers = 0;
    bool strict = false;
    Experiment exp;
    CLI::App* cmd = nullptr;
  };
  std::vector<PhaseArgs> phase_args(7);
  const std::pair<const char*, const char*> phase_info[] = {
      {"kinematic", "Random image of a cone against a fixed cone"},
      {"preimage", "Cone against the preimage of a cone under a random map"},
      {"escape", "Cone against a uniformly random null space"},
      {"logistic", "Existence of the cone-constrained logistic MLE"},
      {"cp", "Conic program outcome trichotomy"},
      {"local-dm", "Low-dimensional shadow radius coverage"},
      {"support-conc", "Squared support value concentration"},
  };
  for (int i = 0; i < 7; ++i) {
    auto& pa = phase_args[static_cast<size_t>(i)];
    pa.exp = static_cast<Experiment>(i);
    pa.cmd = ph->add_subcommand(phase_info[i].first, phase_info[i].second);
    pa.cmd->add_option("--config", pa.config,
                       "JSON config path ('-' for stdin)")
        ->required();
    pa.cmd->add_option("--out", pa.out, "CSV output path (default: stdout)");
    pa.cmd->add_option("--workers", pa.workers,
                       "Worker threads (default: CONELAB_WORKERS or all cores)")
        ->check(CLI::Range(1, 1024));
    pa.cmd->add_flag("--strict", pa.strict,
                     "Exit 3 when any trial reported non-convergence");
  }

  auto* selftest = app.add_subcommand(
      "selftest", "Run the built-in consistency battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    if (sd->parsed()) return run_stat_dim(sd_cone, sd_trials, sd_seed);
    if (wd->parsed()) return run_width(w_cone, w_cap, w_trials, w_seed);
    if (ix->parsed())
      return run_intersect(ix_a, ix_b, ix_seed, ix_flags, ix_witness,
                           ix_strict);
    if (cp->parsed())
      return run_cp(cp_cone, cp_x, cp_rows, cp_b, cp_seed, cp_strict);
    if (lg->parsed())
      return run_logistic(lg_cone, lg_rows, lg_seed, lg_flags, lg_strict);
    if (ph->parsed()) {
      for (const auto& pa : phase_args)
        if (pa.cmd->parsed())
          return run_phase_cmd(pa.exp, pa.config, pa.out, pa.workers,
                               pa.strict);
    }
    if (selftest->parsed()) return run_selftest();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
