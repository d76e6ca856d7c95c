#include "ldon/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace ldon {

namespace {

std::uint64_t fmix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t key = fmix64(seed ^ fmix64(stream + 0x632BE59BD9B4E019ULL));
  return fmix64(key + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t CounterRng::index_below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return CounterRng::bits(base, 0xA5A5A5A5ULL, index);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.index_below(i)]);
  }
  return idx;
}

}  // namespace ldon
