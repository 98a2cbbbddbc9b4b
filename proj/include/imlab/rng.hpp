#pragma once

#include <cstdint>
#include <string_view>

namespace imlab {

/// Counter-style deterministic random stream built on the SplitMix64 mixer.
///
/// Every consumer (trial, bootstrap replicate, sampler, ...) derives its own
/// stream from (master seed, tag, indices), so numeric output never depends
/// on scheduling or worker count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool next_bool() { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_u64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive an independent stream from a master seed, a textual tag and up to
/// two indices (e.g. trial number).
inline RngStream derive_stream(std::uint64_t master, std::string_view tag,
                               std::uint64_t i0 = 0, std::uint64_t i1 = 0) {
  std::uint64_t s = mix_u64(master ^ hash_tag(tag));
  s = mix_u64(s + 0x9e3779b97f4a7c15ULL * (i0 + 1));
  s = mix_u64(s + 0xd1b54a32d192ed03ULL * (i1 + 1));
  return RngStream(s);
}

}  // namespace imlab
