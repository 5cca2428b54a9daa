#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "c4v/stats.hpp"
#include "c4v/types.hpp"

namespace c4v {

/// A node of the concept hierarchy: pixel statistics, a label count table,
/// and children. A node with no children is a leaf.
struct ConceptNode {
  AttrStats stats;
  LabelTable labels;
  std::vector<std::unique_ptr<ConceptNode>> children;

  // Creation-order id; used only for deterministic tie-breaking.
  std::uint64_t id = 0;

  // Cached node entropy, invalidated whenever stats or labels change.
  // Keyed by the sigma floor it was computed with.
  mutable double entropy_cache = 0.0;
  mutable double entropy_cache_floor = -1.0;
  // Cached sum of clamped log-variances for prediction densities.
  mutable double log_var_cache = 0.0;
  mutable double log_var_cache_floor = -1.0;

  explicit ConceptNode(Eigen::Index dim) : stats(dim) {}

  bool is_leaf() const { return children.empty(); }
  void invalidate_caches() const {
    entropy_cache_floor = -1.0;
    log_var_cache_floor = -1.0;
  }
};

struct TreeConfig {
  double sigma_floor = kDefaultSigmaFloor;
  int n_max_default = kDefaultNmax;
  std::uint64_t seed = 0;
};

/// The concept hierarchy. The root always exists; its count equals the
/// number of instances ever learned.
class Tree {
 public:
  Tree(Eigen::Index dim, TreeConfig config = {});

  ConceptNode& root() { return *root_; }
  const ConceptNode& root() const { return *root_; }
  const TreeConfig& config() const { return config_; }
  Eigen::Index dim() const { return dim_; }

  std::unique_ptr<ConceptNode> make_node();
  std::size_t node_count() const;

  // Snapshot layout: {"sigma_floor","n_max_default","seed","dim","root"},
  // node = {"n","mean":[],"m2":[],"label_counts":{},"children":[]}.
  // The stream variants never materialize the whole document, so they are
  // the ones to use for full-scale trees.
  void save_json(std::ostream& out) const;
  static Tree load_json(std::istream& in);
  std::string to_json() const;
  static Tree from_json(const std::string& text);

 private:
  Eigen::Index dim_;
  TreeConfig config_;
  std::unique_ptr<ConceptNode> root_;
  std::uint64_t next_id_ = 0;
};

/// P(child | parent) = child.n / parent.n.
double node_probability(const ConceptNode& node, const ConceptNode& parent);

/// Sum of per-pixel Gaussian entropies plus the label entropy, cached on
/// the node. Requires node.stats.n >= 1.
double node_entropy(const ConceptNode& node, double sigma_floor);

/// Appends `node` to parent's children.
void add_child(ConceptNode& parent, std::unique_ptr<ConceptNode> node);

/// Replaces siblings c1 and c2 with a new node that pools their statistics
/// and adopts both as children. Returns the merged node.
ConceptNode& merge_children(Tree& tree, ConceptNode& parent, ConceptNode& c1,
                            ConceptNode& c2);

/// Removes child c from parent and inserts c's children in its place.
void split_child(ConceptNode& parent, ConceptNode& c);

}  // namespace c4v
