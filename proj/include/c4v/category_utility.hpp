#pragma once

#include <span>

#include "c4v/stats.hpp"

namespace c4v {

/// Borrowed view of one candidate child's statistics.
struct NodeView {
  const AttrStats* stats;
  const LabelTable* labels;
};

/// One child's contribution, with entropies already evaluated.
struct ChildTerm {
  double prob;     // P(C_k)
  double entropy;  // H(A=V | C_k)
};

/// Information-theoretic category utility from precomputed entropies:
/// (1/K) * sum_k P(C_k) * [H(parent) - H(child_k)].
double cu_from_entropies(double parent_entropy,
                         std::span<const ChildTerm> children);

/// Information-theoretic category utility of a candidate partition.
double cu_info(const AttrStats& parent_stats, const LabelTable& parent_labels,
               std::span<const NodeView> children, double sigma_floor);

/// Probability-theoretic category utility (expected-correct-guesses form);
/// continuous attributes use the Gaussian density analogue
/// sum_j P^2 -> 1 / (2 sqrt(pi) sigma').
double cu_prob(const AttrStats& parent_stats, const LabelTable& parent_labels,
               std::span<const NodeView> children, double sigma_floor);

/// Expected-correct-guesses score of one node under the probability-theoretic
/// reading (exposed for tests).
double expected_correct_score(const AttrStats& stats, const LabelTable& labels,
                              double sigma_floor);

}  // namespace c4v
