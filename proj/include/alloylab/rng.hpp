#pragma once

// Deterministic counter-based randomness.
//
// Every coupling draw is a pure function of (seed, realization index, cell),
// so ensembles are reproducible across platforms and independent of
// evaluation order and worker count: any site of any realization can be
// sampled without generating its predecessors.

#include <cstdint>

#include "alloylab/core.hpp"

namespace alloylab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive absorption of one word into a hash state.
inline constexpr std::uint64_t hash_combine(std::uint64_t state, std::uint64_t word) {
  return splitmix64(state ^ (word + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2)));
}

// ZigZag map so negative cell coordinates hash platform-independently.
inline constexpr std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

// Uniform double in [0,1) from the 53 high bits.
inline constexpr double to_unit(std::uint64_t r) {
  return static_cast<double>(r >> 11) * 0x1.0p-53;
}

// Hash of one lattice site of one realization.
inline std::uint64_t site_hash(std::uint64_t seed, std::uint64_t index, const IVec& site, int d) {
  std::uint64_t s = splitmix64(seed);
  s = hash_combine(s, index);
  for (int j = 0; j < d; ++j) s = hash_combine(s, zigzag(site[static_cast<std::size_t>(j)]));
  return splitmix64(s);
}

inline double site_uniform(std::uint64_t seed, std::uint64_t index, const IVec& site, int d) {
  return to_unit(site_hash(seed, index, site, d));
}

// Deterministic stream for non-site draws (solver start vectors, test fields).
class DetStream {
 public:
  explicit DetStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(hash_combine(splitmix64(seed), stream)) {}

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++ctr_); }
  double uniform() { return to_unit(next_u64()); }           // [0,1)
  double symmetric() { return 2.0 * uniform() - 1.0; }       // [-1,1)

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace alloylab
