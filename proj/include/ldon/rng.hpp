#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ldon {

/// Counter-based generator: the k-th draw is a pure hash of
/// (seed, stream, k), so results never depend on platform RNGs or on how
/// work is split across threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static std::uint64_t bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

  std::uint64_t next_u64() { return bits(seed_, stream_, counter_++); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (cosine branch); consumes two draws.
  double normal();
  std::size_t index_below(std::size_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

/// Independent child seed for work item `index`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, CounterRng& rng);

}  // namespace ldon
