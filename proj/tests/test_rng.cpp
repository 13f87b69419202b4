#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "conelab/rng.hpp"
#include "conelab/version.hpp"

using namespace conelab;

// Golden values below were produced by an independent reimplementation of the
// generator (tests/reference_rng.py): a from-scratch Philox4x64-10 in pure
// Python plus a quantile computed by bisection on math.erfc. Raw words must
// match bit for bit; quantile-derived doubles agree across the two
// independent algorithms to ~1e-15, frozen here with tolerance 1e-13.

TEST_CASE("raw word stream matches the frozen reference") {
  RngStream s(7, 1, 0);
  const std::uint64_t expected[8] = {
      0x78a820da73c36307ull, 0x7a7588b47c5caa0aull, 0x10b23863e0c244beull,
      0x91bddf09911884c2ull, 0xe1e9589fbf7f6f1dull, 0x5e794bda66c92f56ull,
      0x845eadf36d56f2f7ull, 0x54f02c50b6b75554ull};
  for (int i = 0; i < 8; ++i) CHECK(s.next_u64() == expected[i]);
}

TEST_CASE("key and counter coordinates separate streams") {
  CHECK(RngStream(7, 2, 0).next_u64() == 0x403742705094cc5full);
  CHECK(RngStream(7, 1, 1).next_u64() == 0x26d9d4844d7a0f99ull);
  CHECK(RngStream(8, 1, 0).next_u64() == 0x02ca5b0e0bc169c3ull);
  // All four first words (including the base stream) are pairwise distinct.
  std::uint64_t w[4] = {RngStream(7, 1, 0).next_u64(),
                        RngStream(7, 2, 0).next_u64(),
                        RngStream(7, 1, 1).next_u64(),
                        RngStream(8, 1, 0).next_u64()};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) CHECK(w[i] != w[j]);
}

TEST_CASE("substreams match the frozen reference and nest once") {
  RngStream s(7, 1, 0);
  CHECK(s.substream(0).next_u64() == 0x6146c31096a219f9ull);
  CHECK(s.substream(0).substream(1).next_u64() == 0xe93ec89f3494cc78ull);
  // Children do not disturb the parent...
  RngStream fresh(7, 1, 0);
  (void)fresh.substream(3);
  CHECK(fresh.next_u64() == 0x78a820da73c36307ull);
  // ...and nesting depth is capped at two levels.
  RngStream deep = s.substream(0).substream(1);
  CHECK_THROWS_AS((void)deep.substream(0), std::logic_error);
}

TEST_CASE("uniform doubles match the frozen reference exactly") {
  // (word >> 11 + 0.5) * 2^-53 is exact double arithmetic, so the values
  // are reproducible bit for bit.
  RngStream s(7, 1, 0);
  CHECK(s.next_uniform() == 0.47131543477349919);
  CHECK(s.next_uniform() == 0.47835592657462439);
  CHECK(s.next_uniform() == 0.065219425567883127);
  CHECK(s.next_uniform() == 0.56930345519603698);
}

TEST_CASE("normal draws match the bisection reference") {
  RngStream s(7, 1, 0);
  const double expected[4] = {-0.071963607740095081, -0.054280289437065643,
                              -1.5123735839444263, 0.17460109310324168};
  for (double e : expected)
    CHECK(std::abs(s.next_normal() - e) <= 1e-13 * (1.0 + std::abs(e)));
}

TEST_CASE("normal quantile matches the bisection reference") {
  struct Row {
    double p, q;
  };
  const Row rows[] = {
      // Reference values are quantiles of the exact binary64 arguments (the
      // nearest double to 1 - 1e-12 carries a tail mass 2.2e-5 smaller in
      // relative terms than 1e-12, so the mirror values are not symmetric).
      {0.025, -1.9599639845400545},   {0.975, 1.9599639845400532},
      {1e-12, -7.0344838253011321},   {1.0 - 1e-12, 7.0344869100478352},
      {0.31, -0.49585034734745337},
  };
  for (const auto& r : rows)
    CHECK(std::abs(inverse_normal_cdf(r.p) - r.q) <=
          1e-13 * (1.0 + std::abs(r.q)));
}

TEST_CASE("normal quantile round-trips through the erfc CDF") {
  // Independent oracle: Phi(q(p)) must reproduce p. std::erfc shares no code
  // with the rational-polynomial quantile.
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  auto survival = [](double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); };
  const double ps[] = {1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.1,
                       0.3,   0.45, 0.5,  0.7,  0.9};
  for (double p : ps) {
    const double q = inverse_normal_cdf(p);
    CHECK(std::abs(cdf(q) - p) <= 5e-13 * p);
    // Mirror point, evaluated through the survival function so the comparison
    // keeps full relative precision in the upper tail. The reference mass is
    // 1 - fl(1 - p): what the double argument actually encodes (for p = 1e-12
    // that differs from p by 2.2e-5 relative).
    const double pm = 1.0 - p;
    const double tail = 1.0 - pm;  // exact: Sterbenz subtraction near one
    const double qm = inverse_normal_cdf(pm);
    CHECK(std::abs(survival(qm) - tail) <= 5e-13 * tail);
  }
  CHECK(inverse_normal_cdf(0.5) == 0.0);
}

TEST_CASE("normal quantile is strictly increasing and symmetric") {
  double prev = inverse_normal_cdf(1e-4);
  for (int i = 1; i <= 999; ++i) {
    double q = inverse_normal_cdf(i / 1000.0);
    CHECK(q > prev);
    prev = q;
  }
  for (double p : {0.25, 0.125, 0.0625, 0.3, 0.45})
    CHECK(std::abs(inverse_normal_cdf(p) + inverse_normal_cdf(1.0 - p)) <=
          1e-9);
}

TEST_CASE("quantile rejects arguments outside the open unit interval") {
  CHECK_THROWS_AS((void)inverse_normal_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS((void)inverse_normal_cdf(1.0), std::domain_error);
  CHECK_THROWS_AS((void)inverse_normal_cdf(-0.5), std::domain_error);
  CHECK_THROWS_AS((void)inverse_normal_cdf(1.5), std::domain_error);
}

TEST_CASE("uniforms stay strictly inside (0,1) with the right mean") {
  RngStream s(123, 9, 0);
  const int n = 200000;
  double mn = 1.0, mx = 0.0, sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = s.next_uniform();
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    sum += u;
  }
  CHECK(mn > 0.0);
  CHECK(mx < 1.0);
  // se = (1/sqrt(12)) / sqrt(n) ~ 6.5e-4; allow four of them.
  CHECK(std::abs(sum / n - 0.5) < 4.0 * 0.2886751 / std::sqrt(double(n)));
}

TEST_CASE("normal moments are right at Monte Carlo accuracy") {
  RngStream s(5, 4, 2);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = s.next_normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("streams with different tags are uncorrelated") {
  RngStream a(42, 1, 0), b(42, 2, 0);
  const int n = 10000;
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = a.next_normal(), y = b.next_normal();
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  CHECK(std::abs(cov / std::sqrt(vx * vy)) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("gaussian containers consume the scalar stream in row-major order") {
  RngStream a(9, 3, 1), b(9, 3, 1);
  Mat M = gaussian_matrix(a, 2, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(M(i, j) == b.next_normal());
  RngStream c(9, 3, 1), d(9, 3, 1);
  Vec v = gaussian_vector(c, 4);
  for (int i = 0; i < 4; ++i) CHECK(v(i) == d.next_normal());
}

TEST_CASE("stream accessors report the identity it was built from") {
  RngStream s(11, 7, 5);
  CHECK(s.master_seed() == 11);
  CHECK(s.domain_tag() == 7);
  CHECK(s.index() == 5);
  RngStream child = s.substream(3);
  CHECK(child.master_seed() == 11);
  CHECK(child.domain_tag() == 7);
  CHECK(child.index() == 5);
  // derive_stream is the (seed, tag, index) constructor spelled as a helper.
  RngStream e = derive_stream(11, 7, 5);
  RngStream f(11, 7, 5);
  for (int i = 0; i < 16; ++i) CHECK(e.next_u64() == f.next_u64());
}

TEST_CASE("identical construction replays the identical sequence") {
  RngStream a(77, 2, 3), b(77, 2, 3);
  for (int i = 0; i < 64; ++i) {
    if (i % 3 == 0)
      CHECK(a.next_u64() == b.next_u64());
    else if (i % 3 == 1)
      CHECK(a.next_uniform() == b.next_uniform());
    else
      CHECK(a.next_normal() == b.next_normal());
  }
}
