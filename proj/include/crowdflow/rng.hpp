#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace crowdflow {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// Avoids std::uniform_real_distribution, whose draw sequence is
// implementation-defined.
inline double uniform_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, n) by rejection sampling.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform_double(rng) < p; }

// splitmix64 finalizer; used to derive decorrelated child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return mix64(base ^ mix64(salt));
}

// FNV-1a, used for content hashes of inputs that key caches.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t fnv1a(double v, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(&v, sizeof v, h);
}

inline std::uint64_t fnv1a(std::int64_t v, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(&v, sizeof v, h);
}

}  // namespace crowdflow
