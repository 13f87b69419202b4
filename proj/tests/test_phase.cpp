#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conelab/phase.hpp"
#include "conelab/util.hpp"
#include "conelab/version.hpp"

using namespace conelab;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("experiment names round-trip") {
  const Experiment all[] = {
      Experiment::kKinematic, Experiment::kPreimage,     Experiment::kEscape,
      Experiment::kLogistic,  Experiment::kCp,           Experiment::kLocalDm,
      Experiment::kSupportConc};
  for (Experiment e : all) {
    auto back = experiment_from_name(experiment_name(e));
    REQUIRE(back.has_value());
    CHECK(*back == e);
  }
  CHECK(!experiment_from_name("nope").has_value());
}

TEST_CASE("config parsing fills documented defaults") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "kinematic", "cone_K": "subspace:n:3",
    "n": 8, "m": 12, "grid": [1, 5], "trials": 25, "seed": 7
  })");
  CHECK(cfg.experiment == Experiment::kKinematic);
  CHECK(cfg.axis == "l");
  CHECK(cfg.cone_L == "subspace:m:c");
  CHECK(cfg.n == 8);
  CHECK(cfg.m == 12);
  CHECK(cfg.trials == 25);
  CHECK(cfg.seed == 7);

  auto pre = parse_experiment_config(R"({
    "experiment": "preimage", "cone_K": "subspace:n:c",
    "n": 8, "m": 4, "axis": "k", "grid": [1, 6], "trials": 25, "seed": 7
  })");
  CHECK(pre.axis == "k");
  CHECK(pre.cone_L == "trivial:m");

  auto ldm = parse_experiment_config(R"({
    "experiment": "local-dm", "cone_K": "orthant:n", "n": 12, "m": 6,
    "l": 4, "k": 2, "trials": 20, "seed": 1
  })");
  CHECK(ldm.n_dirs == 50);
  CHECK(ldm.epsilon == 0.2);
  CHECK(ldm.tau == 0.25);
}

TEST_CASE("forced experiment must agree with the config body") {
  const std::string body = R"({
    "experiment": "escape", "cone_K": "orthant:n",
    "n": 8, "grid": [2, 6], "trials": 20, "seed": 1
  })";
  auto cfg = parse_experiment_config(body, Experiment::kEscape);
  CHECK(cfg.experiment == Experiment::kEscape);
  CHECK_THROWS_AS(
      (void)parse_experiment_config(body, Experiment::kLogistic),
      std::invalid_argument);
  // Subcommand alone may supply the experiment.
  auto cfg2 = parse_experiment_config(R"({
    "cone_K": "orthant:n", "n": 8, "grid": [2, 6],
    "trials": 20, "seed": 1
  })",
                                      Experiment::kEscape);
  CHECK(cfg2.experiment == Experiment::kEscape);
}

TEST_CASE("config rejection: malformed shapes and unknown keys") {
  auto bad = [](const std::string& body) {
    CHECK_THROWS_AS((void)parse_experiment_config(body),
                    std::invalid_argument);
  };
  bad("not json at all");
  bad("[1,2,3]");
  bad(R"({"cone_K": "orthant:4"})");  // no experiment, none forced
  bad(R"({"experiment": "warp", "cone_K": "orthant:4"})");
  // Unknown key for the experiment.
  bad(R"({"experiment": "escape", "cone_K": "orthant:n", "n": 8,
          "grid": [2,6], "trials": 20, "seed": 1, "bogus": 3})");
  // 'm' is grid-controlled for logistic.
  bad(R"({"experiment": "logistic", "cone_K": "full:n", "n": 4, "m": 9,
          "grid": [2,6], "trials": 20, "seed": 1})");
  // Missing required keys.
  bad(R"({"experiment": "escape", "n": 8, "grid": [2,6], "trials": 20,
          "seed": 1})");
  bad(R"({"experiment": "escape", "cone_K": "orthant:n", "grid": [2,6],
          "trials": 20, "seed": 1})");
  bad(R"({"experiment": "local-dm", "cone_K": "orthant:n", "n": 12, "m": 6,
          "l": 4, "trials": 20, "seed": 1})");  // no k
}

TEST_CASE("config rejection: grids, ranges and axes") {
  auto bad = [](const std::string& body) {
    CHECK_THROWS_AS((void)parse_experiment_config(body),
                    std::invalid_argument);
  };
  const std::string head =
      R"({"experiment": "escape", "cone_K": "orthant:n", "n": 8, )";
  bad(head + R"("grid": [5], "trials": 20, "seed": 1})");
  bad(head + R"("grid": [5, 5], "trials": 20, "seed": 1})");
  bad(head + R"("grid": [6, 2], "trials": 20, "seed": 1})");
  bad(head + R"("grid": [2, 9], "trials": 20, "seed": 1})");  // beyond n
  bad(head + R"("grid": [2, 6], "trials": 19, "seed": 1})");
  bad(head + R"("grid": [2, 6], "trials": 20, "seed": -4})");
  bad(head + R"("grid": [2, 6], "trials": 20, "seed": 1, "axis": "m"})");
  // Kinematic l-sweep must stay within [0, m].
  bad(R"({"experiment": "kinematic", "cone_K": "subspace:n:3", "n": 8,
          "m": 6, "grid": [1, 7], "trials": 20, "seed": 1})");
  // Cone dimension mismatch is caught at validation time.
  bad(R"({"experiment": "escape", "cone_K": "orthant:5", "n": 8,
          "grid": [2, 6], "trials": 20, "seed": 1})");
  // Shadow bounds.
  const std::string ldm =
      R"({"experiment": "local-dm", "cone_K": "orthant:n", "n": 12, "m": 6, )";
  bad(ldm + R"("l": 7, "k": 2, "trials": 20, "seed": 1})");   // l > m
  bad(ldm + R"("l": 4, "k": 5, "trials": 20, "seed": 1})");   // k > l
  bad(ldm + R"("l": 4, "k": 2, "epsilon": 1.5, "trials": 20, "seed": 1})");
  bad(ldm + R"("l": 4, "k": 2, "tau": 0.0, "trials": 20, "seed": 1})");
  // Conic-program extras.
  const std::string cp =
      R"({"experiment": "cp", "cone_K": "orthant:n", "n": 6, )";
  bad(cp + R"("grid": [2, 5], "trials": 20, "seed": 1, "b_mode": "junk"})");
  bad(cp + R"("grid": [2, 5], "trials": 20, "seed": 1, "x_spec": "0,0,0,0,0,0"})");
  // Detector knob ranges.
  bad(head + R"("grid": [2, 6], "trials": 20, "seed": 1, "det_rho_tol": 2})");
  bad(head + R"("grid": [2, 6], "trials": 20, "seed": 1, "det_starts": 0})");
}

TEST_CASE("score interval matches hand-computed endpoints") {
  auto ci = wilson_ci(50, 100);
  CHECK(ci.first == doctest::Approx(0.40382982859014716).epsilon(1e-12));
  CHECK(ci.second == doctest::Approx(0.5961701714098528).epsilon(1e-12));
  auto lo = wilson_ci(0, 50);
  CHECK(lo.first == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lo.second == doctest::Approx(0.07135003417431873).epsilon(1e-12));
  auto hi = wilson_ci(50, 50);
  CHECK(hi.first == doctest::Approx(0.9286499658256813).epsilon(1e-12));
  CHECK(hi.second == doctest::Approx(1.0).epsilon(1e-12));
  auto near = wilson_ci(199, 200);
  CHECK(near.first == doctest::Approx(0.9722256001302286).epsilon(1e-12));
  CHECK(near.second == doctest::Approx(0.999116854010634).epsilon(1e-12));
  // Interval is inside [0,1] and contains the point estimate.
  auto mid = wilson_ci(1, 20);
  CHECK(mid.first >= 0.0);
  CHECK(mid.second <= 1.0);
  CHECK(mid.first <= 0.05);
  CHECK(mid.second >= 0.05);
}

TEST_CASE("transition fit recovers a synthetic logistic curve exactly") {
  // p(c) = 1 / (1 + exp(-(c - 12.5) / 2)) on c = 6..19 stays inside the
  // clipping band for T = 500, so logit(p) is exactly linear: slope 1/2,
  // midpoint 12.5.
  std::vector<double> controls, phats;
  std::vector<std::pair<double, double>> cis;
  for (int c = 6; c <= 19; ++c) {
    const double p = 1.0 / (1.0 + std::exp(-(c - 12.5) / 2.0));
    controls.push_back(c);
    phats.push_back(p);
    cis.push_back(wilson_ci(std::llround(p * 500), 500));
  }
  auto fit = fit_transition(controls, phats, cis, 500);
  CHECK(fit.ok);
  CHECK(std::abs(fit.theta0 - 12.5) <= 1e-9);
  CHECK(std::abs(fit.slope - 0.5) <= 1e-12);
}

TEST_CASE("transition fit refuses non-transitions") {
  std::vector<double> controls = {2, 4, 6, 8};
  std::vector<std::pair<double, double>> cis;
  // Decreasing curve: negative slope.
  std::vector<double> dec = {0.9, 0.7, 0.3, 0.1};
  cis.clear();
  for (double p : dec) cis.push_back(wilson_ci(std::llround(p * 200), 200));
  CHECK(!fit_transition(controls, dec, cis, 200).ok);
  // Flat curve: no crossing information.
  std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  cis.clear();
  for (size_t i = 0; i < flat.size(); ++i) cis.push_back(wilson_ci(100, 200));
  CHECK(!fit_transition(controls, flat, cis, 200).ok);
  // Big certified dip inside an otherwise increasing curve.
  std::vector<double> dip = {0.1, 0.9, 0.2, 0.95};
  cis.clear();
  for (double p : dip) cis.push_back(wilson_ci(std::llround(p * 500), 500));
  CHECK(!fit_transition(controls, dip, cis, 500).ok);
}

TEST_CASE("escape sweep reproduces the exact subspace law end to end") {
  // K a rank-4 subspace of R^10 against a random c-dimensional subspace:
  // a shared ray exists generically iff 4 + c > 10. With the exact rank
  // branch there is no Monte Carlo noise: counts are all-or-nothing.
  auto cfg = parse_experiment_config(R"({
    "experiment": "escape", "cone_K": "subspace:n:4", "n": 10,
    "grid": [5, 6, 7, 8], "trials": 20, "seed": 3
  })");
  auto res = run_phase(cfg, 1);
  REQUIRE(res.table.rows.size() == 4);
  const double expected[4] = {0.0, 0.0, 1.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(res.table.rows[i][2] == expected[i] * 20);  // successes
    CHECK(res.table.rows[i][3] == expected[i]);       // p_hat
  }
  CHECK(res.all_converged);
  CHECK(res.fit_applicable);
}

TEST_CASE("phase output is byte-identical across reruns and worker counts") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "escape", "cone_K": "orthant:n", "n": 8,
    "grid": [2, 4, 6], "trials": 24, "seed": 9
  })");
  const std::string a = to_csv(run_phase(cfg, 1));
  const std::string b = to_csv(run_phase(cfg, 3));
  const std::string c = to_csv(run_phase(cfg, 1));
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("emitted table carries the full reproducibility contract") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "escape", "cone_K": "orthant:n", "n": 8,
    "grid": [2, 6], "trials": 20, "seed": 5
  })");
  auto res = run_phase(cfg, 1);
  const std::string csv = to_csv(res);
  auto ls = lines_of(csv);
  REQUIRE(ls.size() == 5);  // metadata, header, 2 rows, trailer
  const std::string meta = "# conelab v" + std::string(kVersion) + " seed=5 rng=" +
                           std::string(kRngAlgorithmId) + " config=";
  CHECK(ls[0].substr(0, meta.size()) == meta);
  const std::string sha = ls[0].substr(meta.size());
  CHECK(sha.size() == 64);
  CHECK(sha == res.config_sha256);
  CHECK(sha == sha256_hex(canonical_config_json(res.cfg)));
  CHECK(ls[1] == "control,trials,successes,p_hat,ci_lo,ci_hi");
  CHECK(ls[2].substr(0, 2) == "2,");
  CHECK(ls[3].substr(0, 2) == "6,");
  CHECK(ls[4].substr(0, 9) == "# theta0=");
  CHECK(ls[4].find("slope=") != std::string::npos);
  CHECK(ls[4].find("fit_ok=") != std::string::npos);
  CHECK(csv.back() == '\n');
}

TEST_CASE("canonical serialization is stable and key-sorted") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "escape", "cone_K": "orthant:n", "n": 8,
    "grid": [2, 6], "trials": 20, "seed": 5
  })");
  const std::string j1 = canonical_config_json(cfg);
  const std::string j2 = canonical_config_json(cfg);
  CHECK(j1 == j2);
  CHECK(j1.find("\"experiment\":\"escape\"") != std::string::npos);
  CHECK(j1.find("\"version\"") != std::string::npos);
  CHECK(j1.find("\"rng\"") != std::string::npos);
  // Changing the seed changes the canonical form (and hence the digest).
  auto cfg2 = parse_experiment_config(R"({
    "experiment": "escape", "cone_K": "orthant:n", "n": 8,
    "grid": [2, 6], "trials": 20, "seed": 6
  })");
  CHECK(canonical_config_json(cfg2) != j1);
  CHECK(sha256_hex(canonical_config_json(cfg2)) !=
        sha256_hex(j1));
}

TEST_CASE("digest helper matches a known vector") {
  // SHA-256 of the empty string and of "abc" are published constants.
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("conic-program sweep emits the outcome trichotomy columns") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "cp", "cone_K": "orthant:n", "n": 6, "x_spec": "ones",
    "grid": [2, 5], "trials": 24, "seed": 11
  })");
  auto res = run_phase(cfg, 1);
  REQUIRE(res.table.columns.size() == 9);
  CHECK(res.table.columns[6] == "p_infeasible");
  CHECK(res.table.columns[7] == "p_bounded");
  CHECK(res.table.columns[8] == "p_unbounded");
  for (const auto& row : res.table.rows) {
    REQUIRE(row.size() == 9);
    CHECK(row[6] + row[7] + row[8] == doctest::Approx(1.0).epsilon(1e-12));
    // Reported successes are the bounded outcomes.
    CHECK(row[2] == doctest::Approx(row[7] * row[1]));
    for (int j = 6; j < 9; ++j) {
      CHECK(row[j] >= 0.0);
      CHECK(row[j] <= 1.0);
    }
  }
}

TEST_CASE("shadow experiment reports per-trial band coverage") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "local-dm", "cone_K": "orthant:n", "n": 24, "m": 10,
    "l": 8, "k": 2, "n_dirs": 6, "trials": 20, "seed": 13
  })");
  auto res = run_phase(cfg, 2);
  CHECK(res.table.columns ==
        std::vector<std::string>{"trial", "n_dirs", "in_band", "frac",
                                 "ratio_min", "ratio_median", "ratio_max"});
  REQUIRE(res.table.rows.size() == 20);
  for (const auto& row : res.table.rows) {
    CHECK(row[1] == 6);
    CHECK(row[2] >= 0);
    CHECK(row[2] <= 6);
    CHECK(row[3] == doctest::Approx(row[2] / 6.0));
    CHECK(row[4] <= row[5]);
    CHECK(row[5] <= row[6]);
    CHECK(row[4] > 0.0);
  }
  REQUIRE(res.table.trailers.size() == 1);
  const auto& tr = res.table.trailers[0];
  CHECK(tr[0].first == "coverage");
  CHECK(tr[1].first == "target_radius");
  // target = sqrt(delta - (m - l)) = sqrt(12 - 2).
  CHECK(std::stod(tr[1].second) == doctest::Approx(std::sqrt(10.0)));
  CHECK(tr[2].first == "epsilon");
  CHECK(tr[3].first == "median_ratio");
  CHECK(!res.fit_applicable);
  // Row budget guard: dropping more than (1 - tau) * delta rows is refused.
  auto tight = parse_experiment_config(R"({
    "experiment": "local-dm", "cone_K": "orthant:n", "n": 24, "m": 16,
    "l": 2, "k": 1, "n_dirs": 4, "trials": 20, "seed": 13
  })");
  CHECK_THROWS_AS((void)run_phase(tight, 1), std::invalid_argument);
}

TEST_CASE("support concentration reports the squared-value table") {
  auto cfg = parse_experiment_config(R"({
    "experiment": "support-conc", "cone_K": "orthant:n", "n": 24,
    "m": 10, "l": 8, "trials": 21, "seed": 17
  })");
  auto res = run_phase(cfg, 1);
  CHECK(res.table.columns == std::vector<std::string>{"trial", "h2"});
  REQUIRE(res.table.rows.size() == 21);
  for (long long i = 0; i < 21; ++i) {
    CHECK(res.table.rows[size_t(i)][0] == double(i));
    CHECK(res.table.rows[size_t(i)][1] >= 0.0);
  }
  const auto& tr = res.table.trailers.at(0);
  CHECK(tr[0].first == "median_h2");
  CHECK(tr[1].first == "target");
  CHECK(std::stod(tr[1].second) == doctest::Approx(10.0));
  CHECK(tr[2].first == "abs_dev");
  CHECK(std::stod(tr[2].second) ==
        doctest::Approx(std::abs(std::stod(tr[0].second) - 10.0)));
}

TEST_CASE("kinematic and preimage sweeps follow their subspace laws") {
  // Image of a rank-3 subspace of R^8 under a random 12x8 map meets a random
  // rank-l subspace of R^12 generically iff 3 + l > 12.
  auto kin = parse_experiment_config(R"({
    "experiment": "kinematic", "cone_K": "subspace:n:3", "n": 8, "m": 12,
    "grid": [8, 9, 10, 11], "trials": 20, "seed": 19
  })");
  auto kres = run_phase(kin, 2);
  const double kexp[4] = {0.0, 0.0, 1.0, 1.0};
  for (int i = 0; i < 4; ++i) CHECK(kres.table.rows[i][3] == kexp[i]);
  // Preimage of the origin (the kernel, rank n - m = 5) meets a rank-c
  // subspace of R^9 generically iff c + 5 > 9.
  auto pre = parse_experiment_config(R"({
    "experiment": "preimage", "cone_K": "subspace:n:c", "n": 9, "m": 4,
    "axis": "k", "grid": [3, 4, 5, 6], "trials": 20, "seed": 23
  })");
  auto pres = run_phase(pre, 1);
  const double pexp[4] = {0.0, 0.0, 1.0, 1.0};
  for (int i = 0; i < 4; ++i) CHECK(pres.table.rows[i][3] == pexp[i]);
}
