#pragma once

#include <cstdint>

namespace poal {

/// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent, reproducible seed for sub-stream `stream` of `base`.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(mix64(base) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

// Fixed sub-stream tags so that paired runs share splits and evaluators.
namespace streams {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kSelection = 2;
inline constexpr std::uint64_t kEvaluator = 1'000'000;
inline constexpr std::uint64_t kCommittee = 2'000'000;
}  // namespace streams

}  // namespace poal
