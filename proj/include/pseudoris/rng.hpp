#pragma once

#include <cstdint>
#include <string_view>

namespace pseudoris {

// Counter-based deterministic RNG (splitmix64). Streams are keyed by mixing
// the global seed with per-candidate coordinates, so every candidate draws
// from an independent stream regardless of evaluation order or platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 bits of mantissa.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

namespace detail {

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// FNV-1a; used both for RNG keying and for stable content digests.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return detail::splitmix_finalize(a + 0x9e3779b97f4a7c15ULL * (b + 1));
}

// Stream key for one caption candidate.
inline std::uint64_t candidate_key(std::uint64_t seed, std::string_view image_id,
                                   std::uint64_t mask_index,
                                   std::uint64_t crop_index,
                                   std::uint64_t config_index) {
  std::uint64_t k = mix_key(seed, fnv1a(image_id));
  k = mix_key(k, mask_index);
  k = mix_key(k, crop_index);
  return mix_key(k, config_index);
}

}  // namespace pseudoris
