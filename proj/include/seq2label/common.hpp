#pragma once

// Seed derivation and deterministic random draws. Every random choice in the
// library flows from one root seed, split per subsystem by name, so a run is
// reproducible bit for bit from its config. std::*_distribution is
// implementation-defined, so draws are hand-rolled on top of mt19937_64.

#include <cstdint>
#include <random>
#include <string_view>

namespace seq2label {

using Dim = std::int64_t;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for a named subsystem ("init:embed", "batching", ...). The salt
// distinguishes repeated uses, e.g. per-epoch batch shuffles.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t salt = 0) {
  return splitmix64(splitmix64(root) ^ fnv1a64(tag) ^ splitmix64(salt + 0x51ed2701));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double next_unit() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // inclusive bounds; modulo bias is irrelevant at the ranges used here
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(gen_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace seq2label
