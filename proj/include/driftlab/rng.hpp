#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace driftlab {

// All randomness in the library flows through this engine type.
using Rng = std::mt19937_64;

// One splitmix64 finalisation step.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Sub-stream seed for (base_seed, label...). Each label is hashed with FNV-1a
// and folded in with splitmix64, so the result depends on label order and is
// stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t base_seed,
                                 std::initializer_list<std::string_view> labels) {
  std::uint64_t h = mix64(base_seed);
  for (auto label : labels) h = mix64(h ^ fnv1a(label));
  return h;
}

}  // namespace driftlab
