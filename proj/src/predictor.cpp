#include "c4v/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace c4v {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)

double clamped_log_var_sum(const ConceptNode& node, double sigma_floor) {
  if (node.log_var_cache_floor != sigma_floor) {
    const double floor_var = sigma_floor * sigma_floor;
    const double inv_n = 1.0 / static_cast<double>(node.stats.n);
    node.log_var_cache =
        (node.stats.m2 * inv_n).max(floor_var).log().sum();
    node.log_var_cache_floor = sigma_floor;
  }
  return node.log_var_cache;
}

struct FrontierEntry {
  double log_score;
  std::uint64_t id;
  const ConceptNode* node;
};

struct FrontierOrder {
  bool operator()(const FrontierEntry& a, const FrontierEntry& b) const {
    if (a.log_score != b.log_score) return a.log_score < b.log_score;
    return a.id > b.id;  // smaller id wins on equal scores
  }
};

/// Add-one-smoothed probability of `label` under the node's label table.
double laplace_label_prob(const ConceptNode& node, int label) {
  const std::int64_t total = node.labels.total();
  std::int64_t count = 0;
  if (auto it = node.labels.counts.find(label); it != node.labels.counts.end())
    count = it->second;
  return static_cast<double>(count + 1) /
         static_cast<double>(total + kNumLabels);
}

std::map<int, double> mix_labels(
    std::span<const std::pair<const ConceptNode*, double>> expanded) {
  double max_score = expanded.front().second;
  for (const auto& [node, score] : expanded)
    max_score = std::max(max_score, score);
  double weight_sum = 0.0;
  std::vector<double> weights;
  weights.reserve(expanded.size());
  for (const auto& [node, score] : expanded) {
    const double w = std::exp(score - max_score);
    weights.push_back(w);
    weight_sum += w;
  }
  std::map<int, double> probs;
  for (int label = 0; label < kNumLabels; ++label) {
    double p = 0.0;
    for (std::size_t i = 0; i < expanded.size(); ++i)
      p += (weights[i] / weight_sum) *
           laplace_label_prob(*expanded[i].first, label);
    probs[label] = p;
  }
  return probs;
}

int argmax_label(const std::map<int, double>& probs) {
  int best = 0;
  double best_p = -1.0;
  for (const auto& [label, p] : probs) {
    if (p > best_p) {
      best_p = p;
      best = label;
    }
  }
  return best;
}

std::vector<std::pair<const ConceptNode*, double>> expand_best_first(
    const Tree& tree, const Instance& instance, int n_max) {
  if (n_max < 1) throw std::invalid_argument("predict: n_max must be >= 1");
  if (tree.root().stats.n < 1)
    throw std::invalid_argument("predict: empty tree");

  std::priority_queue<FrontierEntry, std::vector<FrontierEntry>,
                      FrontierOrder>
      frontier;
  frontier.push({log_collocation(tree.root(), tree, instance),
                 tree.root().id, &tree.root()});

  std::vector<std::pair<const ConceptNode*, double>> expanded;
  expanded.reserve(static_cast<std::size_t>(n_max));
  while (!frontier.empty() &&
         expanded.size() < static_cast<std::size_t>(n_max)) {
    const FrontierEntry top = frontier.top();
    frontier.pop();
    expanded.emplace_back(top.node, top.log_score);
    for (const auto& child : top.node->children)
      frontier.push({log_collocation(*child, tree, instance), child->id,
                     child.get()});
  }
  return expanded;
}

}  // namespace

double log_likelihood(const ConceptNode& node, const Vec& pixels,
                      double sigma_floor) {
  if (node.stats.n < 1)
    throw std::invalid_argument("log_likelihood: empty node");
  if (pixels.size() != node.stats.dim())
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  const double floor_var = sigma_floor * sigma_floor;
  const double inv_n = 1.0 / static_cast<double>(node.stats.n);
  const double quad =
      ((pixels - node.stats.mean).square() /
       (node.stats.m2 * inv_n).max(floor_var))
          .sum();
  const double log_var = clamped_log_var_sum(node, sigma_floor);
  const double d = static_cast<double>(node.stats.dim());
  return -0.5 * (d * kLog2Pi + log_var + quad);
}

double log_collocation(const ConceptNode& node, const Tree& tree,
                       const Instance& instance) {
  const double log_prior =
      std::log(static_cast<double>(node.stats.n)) -
      std::log(static_cast<double>(tree.root().stats.n));
  return log_prior +
         2.0 * log_likelihood(node, instance.pixels,
                              tree.config().sigma_floor);
}

PredictOutcome predict(const Tree& tree, const Instance& instance,
                       int n_max) {
  PredictOutcome outcome;
  outcome.expanded = expand_best_first(tree, instance, n_max);
  outcome.label_probs = mix_labels(outcome.expanded);
  return outcome;
}

int predict_label(const Tree& tree, const Instance& instance, int n_max) {
  return argmax_label(predict(tree, instance, n_max).label_probs);
}

std::vector<int> predict_labels_at(const Tree& tree, const Instance& instance,
                                   std::span<const int> n_max_values) {
  if (n_max_values.empty()) return {};
  if (!std::is_sorted(n_max_values.begin(), n_max_values.end()))
    throw std::invalid_argument("predict_labels_at: budgets must ascend");
  const auto expanded =
      expand_best_first(tree, instance, n_max_values.back());
  std::vector<int> labels;
  labels.reserve(n_max_values.size());
  for (int budget : n_max_values) {
    const std::size_t take =
        std::min(expanded.size(), static_cast<std::size_t>(budget));
    labels.push_back(argmax_label(mix_labels(
        std::span(expanded.data(), take))));
  }
  return labels;
}

}  // namespace c4v
