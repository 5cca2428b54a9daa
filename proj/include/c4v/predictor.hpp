#pragma once

#include <map>
#include <span>
#include <vector>

#include "c4v/tree.hpp"
#include "c4v/types.hpp"

namespace c4v {

/// Result of one best-first categorization: a normalized distribution over
/// labels and the expanded-node trace in expansion order.
struct PredictOutcome {
  std::map<int, double> label_probs;
  std::vector<std::pair<const ConceptNode*, double>> expanded;
};

/// ln P(x | c) under the per-pixel Gaussians with floor-clamped variance.
double log_likelihood(const ConceptNode& node, const Vec& pixels,
                      double sigma_floor);

/// Log collocation score ln P(c) + 2 ln P(x|c); the node-independent
/// constant -ln P(x) is dropped (it cancels in ranking and softmax weights).
double log_collocation(const ConceptNode& node, const Tree& tree,
                       const Instance& instance);

/// Best-first categorization: expand up to n_max concepts, then mix their
/// add-one-smoothed label tables with softmax weights over log collocation.
PredictOutcome predict(const Tree& tree, const Instance& instance, int n_max);

/// Argmax of predict's label distribution; ties go to the smallest label id.
int predict_label(const Tree& tree, const Instance& instance, int n_max);

/// One best-first pass at the largest requested n_max, reporting the argmax
/// label at every requested expansion budget (budgets must be ascending).
/// The expansion order for a smaller budget is a prefix of a larger one, so
/// a single pass serves an entire budget sweep.
std::vector<int> predict_labels_at(const Tree& tree, const Instance& instance,
                                   std::span<const int> n_max_values);

}  // namespace c4v
