#pragma once

// Deterministic, stream-splittable random number generation.
//
// Every consumer owns an RngStream identified by (root_seed, stream_id).
// Identical identifiers yield bit-identical draw sequences regardless of
// thread scheduling, which is what makes concurrent path generation and
// bootstrap replication reproducible. The generator is xoshiro256++ with
// state derived from the identifiers via splitmix64; all distribution
// transforms are implemented here so sequences do not depend on the
// standard library's <random> internals.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mprobe {

// splitmix64 finalizer; full avalanche on a 64-bit word.
constexpr std::uint64_t avalanche64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Combines a seed with a salt into a new 64-bit seed. Not symmetric.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  return avalanche64(avalanche64(seed + kGolden) ^ (salt + 0x6A09E667F3BCC909ULL));
}

// FNV-1a over bytes; used to derive stream salts from names.
constexpr std::uint64_t hash64(std::string_view text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::uint64_t stream_id);

  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Unbiased integer in [0, bound); bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  bool bernoulli(double p);

  // Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal01();

  double normal(double mean, double stddev);

  // Marsaglia-Tsang gamma with unit scale; shape > 0.
  double gamma(double shape);

  double beta(double a, double b);

  // Fisher-Yates using uniform_below; deterministic for a given stream.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t root_seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace mprobe
