#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

namespace conelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Counter-based stream: the generator state is (key, counter) where the key
// encodes (master_seed, domain_tag) and the counter encodes
// (draw block, stream index, two nested sub-stream slots). Streams with
// distinct lineage tuples never share a counter block, so trials can be
// evaluated in any order, or concurrently, with identical output.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t domain_tag,
            std::uint64_t index);

  // Child stream for per-trial work. Two levels of nesting are available;
  // asking for a third throws.
  RngStream substream(std::uint64_t j) const;

  std::uint64_t next_u64();
  // Uniform on the open interval (0,1); never returns an endpoint, so the
  // inverse CDF below stays finite.
  double next_uniform();
  // Standard normal by inverse-CDF transform (rejection-free, fixed draw
  // count: exactly one u64 block slot per variate).
  double next_normal();

  std::uint64_t master_seed() const { return key_[0]; }
  std::uint64_t domain_tag() const { return key_[1]; }
  std::uint64_t index() const { return ctr_[1]; }

 private:
  RngStream() = default;
  void refill();

  std::array<std::uint64_t, 2> key_{};
  std::array<std::uint64_t, 4> ctr_{};
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
  int depth_ = 0;
};

inline RngStream derive_stream(std::uint64_t master_seed,
                               std::uint64_t domain_tag, std::uint64_t index) {
  return RngStream(master_seed, domain_tag, index);
}

// High-accuracy inverse of the standard normal CDF (AS241, ~1e-16 relative).
double inverse_normal_cdf(double p);

Vec gaussian_vector(RngStream& s, int n);
// Entries drawn in row-major order: entry (i,j) is draw i*cols+j.
Mat gaussian_matrix(RngStream& s, int rows, int cols);

}  // namespace conelab
