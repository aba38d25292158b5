#pragma once

#include <cstdint>
#include <random>

namespace purrfect {

/// Seeded generator shared by trial generation and the simulators.
///
/// The bit stream is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distribution layer is implemented here rather than with the
/// <random> distributions, which are implementation-defined, so a seed yields
/// the same trials on every toolchain.
class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi], unbiased (rejection sampling).
  int uniform_int(int lo, int hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  bool bernoulli(double p) { return uniform01() < p; }

  /// Independent child generator for a named sub-stream (participant,
  /// replicate, ...). Seeds are mixed with splitmix64.
  TrialRng fork(std::uint64_t stream) const;

  friend bool operator==(const TrialRng& a, const TrialRng& b) {
    return a.seed_ == b.seed_ && a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace purrfect
