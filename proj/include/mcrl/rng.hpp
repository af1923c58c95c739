#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mcrl {

// All randomness flows through explicitly seeded engines of this type.
using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a base seed and any number of
/// integer keys (stream ids, trial indices, evaluation counters).
template <class... Keys>
constexpr std::uint64_t derive_seed(std::uint64_t base, Keys... keys) {
  std::uint64_t h = mix64(base);
  ((h = mix64(h ^ static_cast<std::uint64_t>(keys))), ...);
  return h;
}

// FNV-1a, used to key seeds on participant ids and model ids.
constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream ids for derive_seed so that unrelated consumers never share draws.
namespace stream {
inline constexpr std::uint64_t ground_truth = 1;
inline constexpr std::uint64_t init_weights = 2;
inline constexpr std::uint64_t policy = 3;
inline constexpr std::uint64_t threshold = 4;
inline constexpr std::uint64_t optimizer = 5;
inline constexpr std::uint64_t evaluation = 6;
inline constexpr std::uint64_t exceedance = 7;
inline constexpr std::uint64_t agent = 8;
inline constexpr std::uint64_t bootstrap = 9;
}  // namespace stream

}  // namespace mcrl
