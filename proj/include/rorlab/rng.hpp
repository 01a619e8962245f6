#pragma once

#include <cstdint>

namespace rorlab {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic sub-seed for an independent stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x6a09e667f3bcc909ULL));
}

/// Counter-based generator: the i-th draw is mix64(key + i * golden).
///
/// Everything built on it (uniforms, bounded integers, normals) is defined
/// here rather than through <random> distributions, whose output is
/// implementation-defined. Identical seeds give identical streams on every
/// platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() {
    return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n) without modulo bias. n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform ±1.
  int sign() { return (next_u64() >> 63) ? 1 : -1; }

  bool coin() { return (next_u64() >> 63) != 0; }

  /// Standard normal via Box-Muller; pairs are cached.
  double normal();

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rorlab
