#pragma once

#include <cstdint>

namespace conelab {

inline constexpr const char* kVersion = "0.1.0";

// Frozen identifier of the pseudo-random pipeline: Philox 4x64 with 10 rounds
// feeding Wichura's AS241 inverse normal CDF. Recorded in every CSV header so
// archived results name the exact bit stream that produced them.
inline constexpr const char* kRngAlgorithmId = "philox4x64-10/as241";

// Relative singular-value cutoff shared by every rank decision (null spaces,
// basis orthonormalization, image-cone collapse).
inline constexpr double kRankCutoffRel = 1e-10;

// Domain tags keep independent sampling duties on disjoint key lanes.
// These values are part of the reproducibility contract: changing one changes
// every archived stream derived from it.
namespace tags {
inline constexpr std::uint64_t kConeBasis = 1;
inline constexpr std::uint64_t kStatDim = 2;
inline constexpr std::uint64_t kWidth = 3;
inline constexpr std::uint64_t kIntersect = 4;
inline constexpr std::uint64_t kConicProgram = 5;
inline constexpr std::uint64_t kLogistic = 6;
inline constexpr std::uint64_t kSingularValue = 7;
inline constexpr std::uint64_t kConcentration = 8;
// Experiments occupy 100 + experiment enum value.
inline constexpr std::uint64_t kExperimentBase = 100;
}  // namespace tags

}  // namespace conelab
