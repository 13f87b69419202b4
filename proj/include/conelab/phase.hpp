#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conelab/intersect.hpp"
#include "conelab/solver.hpp"

namespace conelab {

// Monte Carlo experiment harness: sweeps a control parameter over a grid,
// runs independent trials per grid point on dedicated random substreams, and
// emits a deterministic CSV (byte-identical across reruns and worker counts).

enum class Experiment : int {
  kKinematic = 0,    // random image of K meets fixed cone L
  kPreimage = 1,     // K meets the preimage of L under a random map
  kEscape = 2,       // K meets a uniformly random null space
  kLogistic = 3,     // constrained logistic MLE existence
  kCp = 4,           // conic program outcome trichotomy
  kLocalDm = 5,      // low-dimensional shadow radius coverage
  kSupportConc = 6,  // squared support value concentration
};

const char* experiment_name(Experiment e);
std::optional<Experiment> experiment_from_name(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::kKinematic;
  std::string cone_K;      // primal cone spec (may use dim tokens n, m, c, l, k)
  std::string cone_L;      // secondary cone spec where applicable
  int n = 0;               // ambient dimension of K
  int m = 0;               // rows of the random map (fixed-axis experiments)
  std::string axis;        // which quantity the grid controls: "l", "m" or "k"
  std::vector<long long> grid;  // strictly increasing control values
  long long trials = 0;
  std::uint64_t seed = 0;

  // conic-program experiment
  std::string x_spec = "e1";    // objective direction (normalized)
  std::string b_mode = "zero";  // "zero" (homogeneous) or "unit" (b = e1)

  // shadow / support experiments
  int l = 0;           // retained coordinate count
  int k = 0;           // shadow dimension
  int n_dirs = 50;     // directions per trial
  double epsilon = 0.2;  // relative band half-width
  double tau = 0.25;   // row-budget slack requirement

  DetectOpts detect;
  SolverOptions solver;
  ImageOpts image;
};

// Parses a flat JSON object; rejects unknown keys and keys that the selected
// experiment does not use. `forced` pins the experiment (CLI subcommand) and
// must agree with an explicit "experiment" entry when both are present.
// Throws std::invalid_argument on any violation.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         std::optional<Experiment> forced = std::nullopt);

// Canonical serialization of a resolved config (defaults materialized, keys
// sorted); its SHA-256 is stamped into the CSV metadata line.
std::string canonical_config_json(const ExperimentConfig& cfg);

// 95% Wilson score interval for `successes` out of `trials`.
std::pair<double, double> wilson_ci(long long successes, long long trials, double z = 1.96);

struct FitResult {
  double theta0 = 0.0;
  double slope = 0.0;
  bool ok = false;
};

// Least-squares line through logit(p) vs control, with p clipped to
// [1/(2T), 1 - 1/(2T)]. theta0 is the fitted 1/2-crossing. ok demands a
// positive slope, a crossing inside the grid span, and no CI-certified
// decrease between adjacent grid points.
FitResult fit_transition(const std::vector<double>& controls, const std::vector<double>& p_hats,
                         const std::vector<std::pair<double, double>>& cis,
                         long long trials_per_point);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  // Comment trailer lines, each "# k1=v1 k2=v2 ...".
  std::vector<std::vector<std::pair<std::string, std::string>>> trailers;
};

struct PhaseResult {
  ExperimentConfig cfg;
  std::string config_sha256;
  CsvTable table;
  FitResult fit;               // populated when fit_applicable
  bool fit_applicable = false;
  bool all_converged = true;   // false if any trial flagged solver trouble
};

// Runs the experiment with `workers` threads (0 = hardware concurrency).
// Output is independent of the worker count.
PhaseResult run_phase(const ExperimentConfig& cfg, int workers = 0);

// Full CSV: metadata line, column header, data rows, trailer comments.
std::string to_csv(const PhaseResult& result);

}  // namespace conelab
