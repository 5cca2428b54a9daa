#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace c4v {

using Rng = std::mt19937_64;

/// Uniform draw in [0, bound) that does not depend on the standard
/// library's distribution implementation, so shuffles are reproducible
/// across platforms.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

/// Fisher-Yates shuffle with a platform-independent draw.
template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Uniform sample of k items without replacement (order randomized).
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k,
                                          Rng& rng) {
  seeded_shuffle(pool, rng);
  if (pool.size() > k) pool.resize(k);
  return pool;
}

}  // namespace c4v
