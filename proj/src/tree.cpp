#include "c4v/tree.hpp"

#include <charconv>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace c4v {

using nlohmann::json;

Tree::Tree(Eigen::Index dim, TreeConfig config)
    : dim_(dim), config_(config) {
  root_ = make_node();
}

std::unique_ptr<ConceptNode> Tree::make_node() {
  auto node = std::make_unique<ConceptNode>(dim_);
  node->id = next_id_++;
  return node;
}

namespace {

std::size_t count_nodes(const ConceptNode& node) {
  std::size_t n = 1;
  for (const auto& child : node.children) n += count_nodes(*child);
  return n;
}

// Shortest decimal representation that round-trips the exact double.
void write_double(std::ostream& out, double value) {
  char buffer[32];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  out.write(buffer, end - buffer);
}

void write_vec(std::ostream& out, const Vec& values) {
  out.put('[');
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i > 0) out.put(',');
    write_double(out, values[i]);
  }
  out.put(']');
}

// Full-scale trees hold tens of thousands of 784-dimensional nodes; the
// writer streams straight to the output so memory stays at the tree itself.
void write_node(std::ostream& out, const ConceptNode& node) {
  out << "{\"n\":" << node.stats.n << ",\"mean\":";
  write_vec(out, node.stats.mean);
  out << ",\"m2\":";
  write_vec(out, node.stats.m2);
  out << ",\"label_counts\":{";
  bool first = true;
  for (const auto& [label, count] : node.labels.counts) {
    if (!first) out.put(',');
    first = false;
    out << '"' << label << "\":" << count;
  }
  out << "},\"children\":[";
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (i > 0) out.put(',');
    write_node(out, *node.children[i]);
  }
  out << "]}";
}

// SAX handler that builds the tree directly during parsing, again without
// an intermediate document. Relies on the writer emitting "dim" and the
// config scalars before "root".
class TreeSax : public nlohmann::json_sax<json> {
 public:
  Tree take_tree() {
    if (!tree_) throw std::runtime_error("tree snapshot: missing root");
    return std::move(*tree_);
  }

  bool null() override { return fail("unexpected null"); }
  bool boolean(bool) override { return fail("unexpected boolean"); }
  bool string(string_t&) override { return fail("unexpected string"); }
  bool binary(binary_t&) override { return fail("unexpected binary"); }

  bool number_integer(number_integer_t value) override {
    return number(static_cast<double>(value), value);
  }
  bool number_unsigned(number_unsigned_t value) override {
    return number(static_cast<double>(value),
                  static_cast<std::int64_t>(value));
  }
  bool number_float(number_float_t value, const string_t&) override {
    return number(value, static_cast<std::int64_t>(value));
  }

  bool start_object(std::size_t) override {
    if (context_.empty()) {
      context_.push_back(Context::kTop);
      return true;
    }
    switch (context_.back()) {
      case Context::kTop:
        if (key_ != "root") return fail("unexpected object at top level");
        tree_.emplace(dim_, config_);
        nodes_.push_back(&tree_->root());
        context_.push_back(Context::kNode);
        return true;
      case Context::kChildren: {
        auto child = tree_->make_node();
        nodes_.push_back(child.get());
        nodes_[nodes_.size() - 2]->children.push_back(std::move(child));
        context_.push_back(Context::kNode);
        return true;
      }
      case Context::kNode:
        if (key_ != "label_counts") return fail("unexpected nested object");
        context_.push_back(Context::kLabels);
        return true;
      default:
        return fail("unexpected object");
    }
  }

  bool end_object() override {
    if (context_.empty()) return fail("unbalanced object");
    if (context_.back() == Context::kNode) nodes_.pop_back();
    context_.pop_back();
    return true;
  }

  bool start_array(std::size_t) override {
    if (context_.empty() || context_.back() != Context::kNode)
      return fail("unexpected array");
    if (key_ == "mean") {
      context_.push_back(Context::kMean);
    } else if (key_ == "m2") {
      context_.push_back(Context::kM2);
    } else if (key_ == "children") {
      context_.push_back(Context::kChildren);
    } else {
      return fail("unexpected array key");
    }
    buffer_.clear();
    return true;
  }

  bool end_array() override {
    if (context_.empty()) return fail("unbalanced array");
    const Context ctx = context_.back();
    context_.pop_back();
    if (ctx == Context::kMean || ctx == Context::kM2) {
      if (buffer_.size() != static_cast<std::size_t>(dim_))
        return fail("dimension mismatch");
      Vec& target =
          ctx == Context::kMean ? nodes_.back()->stats.mean
                                : nodes_.back()->stats.m2;
      target = Eigen::Map<const Vec>(buffer_.data(),
                                     static_cast<Eigen::Index>(buffer_.size()));
    }
    return true;
  }

  bool key(string_t& value) override {
    key_ = value;
    return true;
  }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& e) override {
    throw std::runtime_error("tree snapshot: parse error at byte " +
                             std::to_string(position) + ": " + e.what());
  }

 private:
  enum class Context { kTop, kNode, kMean, kM2, kLabels, kChildren };

  bool fail(const char* message) {
    throw std::runtime_error(std::string("tree snapshot: ") + message);
  }

  bool number(double as_double, std::int64_t as_int) {
    if (context_.empty()) return fail("number outside any value");
    switch (context_.back()) {
      case Context::kMean:
      case Context::kM2:
        buffer_.push_back(as_double);
        return true;
      case Context::kLabels:
        nodes_.back()->labels.counts[std::stoi(key_)] = as_int;
        return true;
      case Context::kNode:
        if (key_ != "n") return fail("unexpected node scalar");
        nodes_.back()->stats.n = as_int;
        return true;
      case Context::kTop:
        if (key_ == "sigma_floor")
          config_.sigma_floor = as_double;
        else if (key_ == "n_max_default")
          config_.n_max_default = static_cast<int>(as_int);
        else if (key_ == "seed")
          config_.seed = static_cast<std::uint64_t>(as_int);
        else if (key_ == "dim")
          dim_ = static_cast<Eigen::Index>(as_int);
        else
          return fail("unknown top-level key");
        return true;
      default:
        return fail("unexpected number");
    }
  }

  TreeConfig config_;
  Eigen::Index dim_ = 0;
  std::optional<Tree> tree_;
  std::vector<ConceptNode*> nodes_;
  std::vector<Context> context_;
  std::vector<double> buffer_;
  std::string key_;
};

}  // namespace

std::size_t Tree::node_count() const { return count_nodes(*root_); }

void Tree::save_json(std::ostream& out) const {
  out << "{\"sigma_floor\":";
  write_double(out, config_.sigma_floor);
  out << ",\"n_max_default\":" << config_.n_max_default
      << ",\"seed\":" << config_.seed << ",\"dim\":" << dim_ << ",\"root\":";
  write_node(out, *root_);
  out << "}";
}

Tree Tree::load_json(std::istream& in) {
  TreeSax handler;
  json::sax_parse(in, &handler);
  return handler.take_tree();
}

std::string Tree::to_json() const {
  std::ostringstream out;
  save_json(out);
  return out.str();
}

Tree Tree::from_json(const std::string& text) {
  std::istringstream in(text);
  return load_json(in);
}

double node_probability(const ConceptNode& node, const ConceptNode& parent) {
  if (parent.stats.n <= 0)
    throw std::invalid_argument("node_probability: empty parent");
  return static_cast<double>(node.stats.n) /
         static_cast<double>(parent.stats.n);
}

double node_entropy(const ConceptNode& node, double sigma_floor) {
  if (node.stats.n < 1)
    throw std::invalid_argument("node_entropy: empty node");
  if (node.entropy_cache_floor != sigma_floor) {
    node.entropy_cache =
        pixel_entropy_sum(node.stats, sigma_floor) +
        categorical_entropy(node.labels);
    node.entropy_cache_floor = sigma_floor;
  }
  return node.entropy_cache;
}

void add_child(ConceptNode& parent, std::unique_ptr<ConceptNode> node) {
  parent.children.push_back(std::move(node));
}

namespace {

std::size_t child_index(const ConceptNode& parent, const ConceptNode& child) {
  for (std::size_t i = 0; i < parent.children.size(); ++i)
    if (parent.children[i].get() == &child) return i;
  throw std::invalid_argument("node is not a child of the given parent");
}

}  // namespace

ConceptNode& merge_children(Tree& tree, ConceptNode& parent, ConceptNode& c1,
                            ConceptNode& c2) {
  if (&c1 == &c2)
    throw std::invalid_argument("merge_children: targets must be distinct");
  const std::size_t i1 = child_index(parent, c1);
  const std::size_t i2 = child_index(parent, c2);

  auto merged = tree.make_node();
  merged->stats = merge(c1.stats, c2.stats);
  merged->labels = c1.labels;
  for (const auto& [label, count] : c2.labels.counts)
    merged->labels.add(label, count);

  // The merged node adopts c1 then c2 and takes the earlier slot.
  merged->children.push_back(std::move(parent.children[i1]));
  merged->children.push_back(std::move(parent.children[i2]));
  const std::size_t lo = std::min(i1, i2);
  const std::size_t hi = std::max(i1, i2);
  ConceptNode& out = *merged;
  parent.children[lo] = std::move(merged);
  parent.children.erase(parent.children.begin() +
                        static_cast<std::ptrdiff_t>(hi));
  return out;
}

void split_child(ConceptNode& parent, ConceptNode& c) {
  if (c.is_leaf())
    throw std::invalid_argument("split_child: target has no children");
  const std::size_t idx = child_index(parent, c);
  auto removed = std::move(parent.children[idx]);
  parent.children.erase(parent.children.begin() +
                        static_cast<std::ptrdiff_t>(idx));
  parent.children.insert(parent.children.begin() +
                             static_cast<std::ptrdiff_t>(idx),
                         std::make_move_iterator(removed->children.begin()),
                         std::make_move_iterator(removed->children.end()));
}

}  // namespace c4v
