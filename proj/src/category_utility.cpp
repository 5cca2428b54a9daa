#include "c4v/category_utility.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace c4v {

namespace {

void check_partition(const AttrStats& parent_stats,
                     std::span<const NodeView> children) {
  if (children.empty())
    throw std::invalid_argument("category utility: no children");
  std::int64_t total = 0;
  for (const NodeView& c : children) {
    if (c.stats->n < 1)
      throw std::invalid_argument("category utility: empty child");
    total += c.stats->n;
  }
  if (total != parent_stats.n)
    throw std::invalid_argument("category utility: child counts do not sum "
                                "to the parent count");
}

}  // namespace

double cu_from_entropies(double parent_entropy,
                         std::span<const ChildTerm> children) {
  double acc = 0.0;
  for (const ChildTerm& c : children)
    acc += c.prob * (parent_entropy - c.entropy);
  return acc / static_cast<double>(children.size());
}

double cu_info(const AttrStats& parent_stats, const LabelTable& parent_labels,
               std::span<const NodeView> children, double sigma_floor) {
  check_partition(parent_stats, children);
  const double parent_entropy = pixel_entropy_sum(parent_stats, sigma_floor) +
                                categorical_entropy(parent_labels);
  double acc = 0.0;
  for (const NodeView& c : children) {
    const double p = static_cast<double>(c.stats->n) /
                     static_cast<double>(parent_stats.n);
    const double h = pixel_entropy_sum(*c.stats, sigma_floor) +
                     categorical_entropy(*c.labels);
    acc += p * (parent_entropy - h);
  }
  return acc / static_cast<double>(children.size());
}

double expected_correct_score(const AttrStats& stats, const LabelTable& labels,
                              double sigma_floor) {
  if (stats.n < 1)
    throw std::invalid_argument("expected_correct_score: empty statistics");
  const double floor_var = sigma_floor * sigma_floor;
  const double inv_n = 1.0 / static_cast<double>(stats.n);
  // 1 / (2 sqrt(pi) sigma') summed over pixels.
  const double inv_two_sqrt_pi = 0.5 / std::sqrt(std::numbers::pi);
  const double pixel_score =
      ((stats.m2 * inv_n).max(floor_var).sqrt().inverse() * inv_two_sqrt_pi)
          .sum();
  double label_score = 0.0;
  const std::int64_t total = labels.total();
  if (total > 0) {
    for (const auto& [label, count] : labels.counts) {
      const double p =
          static_cast<double>(count) / static_cast<double>(total);
      label_score += p * p;
    }
  }
  return pixel_score + label_score;
}

double cu_prob(const AttrStats& parent_stats, const LabelTable& parent_labels,
               std::span<const NodeView> children, double sigma_floor) {
  check_partition(parent_stats, children);
  const double parent_score =
      expected_correct_score(parent_stats, parent_labels, sigma_floor);
  double acc = 0.0;
  for (const NodeView& c : children) {
    const double p = static_cast<double>(c.stats->n) /
                     static_cast<double>(parent_stats.n);
    acc += p * (expected_correct_score(*c.stats, *c.labels, sigma_floor) -
                parent_score);
  }
  return acc / static_cast<double>(children.size());
}

}  // namespace c4v
