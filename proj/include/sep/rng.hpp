#pragma once

#include <cstdint>
#include <random>

namespace sep {

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key for the stream of replica `index` under `root`. Distinct (root, index)
/// pairs give unrelated keys, so replicas can run in any order.
constexpr std::uint64_t stream_key(std::uint64_t root, std::uint64_t index) {
  return mix64(mix64(root) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t root, std::uint64_t index) {
  return Engine(stream_key(root, index));
}

/// Uniform on [0,1) from the top 53 bits; platform independent, unlike
/// std::uniform_real_distribution.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace sep
