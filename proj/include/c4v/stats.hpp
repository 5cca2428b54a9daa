#pragma once

#include <cstdint>
#include <map>

#include "c4v/types.hpp"

namespace c4v {

/// Streaming Gaussian sufficient statistics for a vector of pixel
/// attributes: count, per-pixel mean, and per-pixel sum of squared
/// deviations from the mean (Welford's M2).
struct AttrStats {
  std::int64_t n = 0;
  Vec mean;
  Vec m2;

  AttrStats() = default;
  explicit AttrStats(Eigen::Index dim)
      : mean(Vec::Zero(dim)), m2(Vec::Zero(dim)) {}

  Eigen::Index dim() const { return mean.size(); }

  /// Population variance m2/n (zero vector when n = 0).
  Vec variance() const;
};

/// Count table for the nominal label attribute.
struct LabelTable {
  std::map<int, std::int64_t> counts;

  std::int64_t total() const;
  void add(int label, std::int64_t k = 1);
};

/// Absorb one observation via Welford's single-pass recurrence.
void update(AttrStats& stats, const Vec& pixels);

/// Pool two statistics as if computed over the union of their data
/// (parallel Welford combination).
AttrStats merge(const AttrStats& a, const AttrStats& b);

/// Differential entropy of a Gaussian in nats, with the standard
/// deviation clamped below by sigma_floor: 1/2 ln(2*pi*e) + ln(max(sigma, floor)).
double gaussian_entropy(double sigma, double sigma_floor);

/// Shannon entropy in nats of the label distribution; 0 for an empty table.
double categorical_entropy(const LabelTable& table);

/// Sum of per-pixel Gaussian entropies for the clamped population
/// standard deviations of `stats`. Requires stats.n >= 1.
double pixel_entropy_sum(const AttrStats& stats, double sigma_floor);

}  // namespace c4v
