#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgsm/error.hpp"

namespace dgsm::spn {

using VariableId = std::uint32_t;
using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { Indicator, Sum, Product };

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Free-standing node description, used when a graph is assembled from an
/// external source (deserialization, tests). Builders write the arena
/// directly instead.
struct NodeSpec {
  NodeKind kind = NodeKind::Product;
  VariableId variable = 0;
  std::uint32_t value = 0;
  std::vector<NodeId> children;
  std::vector<double> weights;

  static NodeSpec indicator(VariableId var, std::uint32_t val) {
    return {NodeKind::Indicator, var, val, {}, {}};
  }
  static NodeSpec sum(std::vector<NodeId> children, std::vector<double> weights) {
    return {NodeKind::Sum, 0, 0, std::move(children), std::move(weights)};
  }
  static NodeSpec product(std::vector<NodeId> children) {
    return {NodeKind::Product, 0, 0, std::move(children), {}};
  }
};

/// Dynamic bitset over variable ids; node scopes.
class VarSet {
 public:
  VarSet() = default;
  explicit VarSet(std::size_t num_vars) : words_((num_vars + 63) / 64, 0) {}

  void insert(VariableId v) { words_[v / 64] |= std::uint64_t{1} << (v % 64); }
  bool contains(VariableId v) const { return (words_[v / 64] >> (v % 64)) & 1U; }

  VarSet& operator|=(const VarSet& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }
  bool intersects(const VarSet& other) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }
  VarSet intersection(const VarSet& other) const {
    VarSet out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
    return out;
  }
  std::vector<VariableId> to_vector() const {
    std::vector<VariableId> out;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w) {
        const int bit = __builtin_ctzll(w);
        out.push_back(static_cast<VariableId>(i * 64 + bit));
        w &= w - 1;
      }
    }
    return out;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }
  bool operator==(const VarSet&) const = default;

 private:
  std::vector<std::uint64_t> words_;
};

class SpnBuilder;

/// Rooted DAG of indicator, sum and product nodes stored as an
/// index-addressed arena with CSR child lists. Every node owns a contiguous
/// edge range; sum edges carry weights, product edges carry weight 1.
///
/// Construction checks referential integrity and acyclicity and caches a
/// topological order (children before parents) over the nodes reachable
/// from the root. Inference never mutates the graph, so one instance can be
/// shared by concurrent evaluations.
class SpnGraph {
 public:
  SpnGraph(std::vector<std::uint32_t> cardinalities, std::span<const NodeSpec> nodes, NodeId root)
      : cards_(std::move(cardinalities)), root_(root) {
    edge_begin_.reserve(nodes.size() + 1);
    edge_begin_.push_back(0);
    for (const NodeSpec& n : nodes) {
      kind_.push_back(n.kind);
      var_.push_back(n.variable);
      val_.push_back(n.value);
      if (n.kind == NodeKind::Sum && n.weights.size() != n.children.size()) {
        throw Error(ErrorKind::InvalidParams,
                    "sum node " + std::to_string(kind_.size() - 1) + " has " +
                        std::to_string(n.children.size()) + " children but " +
                        std::to_string(n.weights.size()) + " weights");
      }
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        edge_child_.push_back(n.children[i]);
        weight_.push_back(n.kind == NodeKind::Sum ? n.weights[i] : 1.0);
      }
      edge_begin_.push_back(static_cast<std::uint32_t>(edge_child_.size()));
    }
    finalize();
  }

  std::size_t num_vars() const { return cards_.size(); }
  std::uint32_t cardinality(VariableId v) const { return cards_[v]; }
  std::span<const std::uint32_t> cardinalities() const { return cards_; }
  std::size_t num_nodes() const { return kind_.size(); }
  std::size_t num_edges() const { return edge_child_.size(); }
  NodeId root() const { return root_; }

  NodeKind kind(NodeId n) const { return kind_[n]; }
  VariableId indicator_variable(NodeId n) const { return var_[n]; }
  std::uint32_t indicator_value(NodeId n) const { return val_[n]; }

  std::uint32_t first_edge(NodeId n) const { return edge_begin_[n]; }
  std::uint32_t end_edge(NodeId n) const { return edge_begin_[n + 1]; }
  std::span<const NodeId> children(NodeId n) const {
    return std::span(edge_child_).subspan(edge_begin_[n], edge_begin_[n + 1] - edge_begin_[n]);
  }
  std::span<const double> weights(NodeId n) const {
    return std::span(weight_).subspan(edge_begin_[n], edge_begin_[n + 1] - edge_begin_[n]);
  }
  NodeId edge_child(std::uint32_t e) const { return edge_child_[e]; }
  double edge_weight(std::uint32_t e) const { return weight_[e]; }
  double edge_log_weight(std::uint32_t e) const { return log_weight_[e]; }

  /// All edge weights in edge order (product edges are 1).
  std::span<const double> edge_weights() const { return weight_; }

  /// Replaces all edge weights. Product-edge entries are ignored.
  void set_edge_weights(std::span<const double> weights) {
    if (weights.size() != weight_.size()) {
      throw Error(ErrorKind::ShapeMismatch, "weight vector has " + std::to_string(weights.size()) +
                                                " entries, graph has " +
                                                std::to_string(weight_.size()) + " edges");
    }
    for (NodeId n = 0; n < num_nodes(); ++n) {
      if (kind_[n] != NodeKind::Sum) continue;
      for (auto e = first_edge(n); e < end_edge(n); ++e) weight_[e] = weights[e];
    }
    check_weights();
    refresh_log_weights();
  }

  /// Nodes reachable from the root, children before parents.
  std::span<const NodeId> topo_order() const { return topo_; }

  bool reachable(NodeId n) const { return reachable_[n]; }

  /// True for product nodes with at least one indicator child; such a
  /// product is zero whenever the evidence contradicts that indicator.
  bool gated(NodeId n) const { return gated_[n]; }

  /// For each child of a sum root, the topologically ordered nodes below
  /// it (the child included). Empty unless the root is a sum with at least
  /// one gated child. Lets a pass whose evidence closes all but one gated
  /// root branch skip the other branches.
  std::span<const std::vector<NodeId>> root_branches() const { return branches_; }

  std::size_t count(NodeKind k) const {
    return static_cast<std::size_t>(std::count(kind_.begin(), kind_.end(), k));
  }

  /// Scope (set of variables below) of every node.
  std::vector<VarSet> compute_scopes() const {
    std::vector<VarSet> scopes(num_nodes(), VarSet(num_vars()));
    for (NodeId n : topo_) {
      if (kind_[n] == NodeKind::Indicator) {
        scopes[n].insert(var_[n]);
      } else {
        for (NodeId c : children(n)) scopes[n] |= scopes[c];
      }
    }
    return scopes;
  }

 private:
  friend class SpnBuilder;
  SpnGraph() = default;

  void finalize() {
    const auto n = static_cast<NodeId>(num_nodes());
    if (root_ >= n) {
      throw Error(ErrorKind::DanglingReference, "root " + std::to_string(root_) + " out of range");
    }
    for (NodeId i = 0; i < n; ++i) {
      if (kind_[i] == NodeKind::Indicator) {
        if (var_[i] >= cards_.size()) {
          throw Error(ErrorKind::DanglingReference,
                      "indicator " + std::to_string(i) + " names unknown variable " +
                          std::to_string(var_[i]));
        }
        if (val_[i] >= cards_[var_[i]]) {
          throw Error(ErrorKind::DanglingReference,
                      "indicator " + std::to_string(i) + " value " + std::to_string(val_[i]) +
                          " exceeds cardinality " + std::to_string(cards_[var_[i]]));
        }
        if (end_edge(i) != first_edge(i)) {
          throw Error(ErrorKind::InvalidParams, "indicator " + std::to_string(i) + " has children");
        }
        continue;
      }
      if (end_edge(i) == first_edge(i)) {
        throw Error(ErrorKind::InvalidParams, "internal node " + std::to_string(i) + " has no children");
      }
      for (NodeId c : children(i)) {
        if (c >= n) {
          throw Error(ErrorKind::DanglingReference,
                      "node " + std::to_string(i) + " references missing child " + std::to_string(c));
        }
      }
    }
    for (auto c : cards_) {
      if (c < 2) throw Error(ErrorKind::InvalidParams, "variable cardinality must be >= 2");
    }
    check_weights();
    sort_topologically();
    refresh_log_weights();
    gated_.assign(n, false);
    for (NodeId i = 0; i < n; ++i) {
      if (kind_[i] != NodeKind::Product) continue;
      for (NodeId c : children(i)) {
        if (kind_[c] == NodeKind::Indicator) gated_[i] = true;
      }
    }
    build_root_branches();
  }

  void build_root_branches() {
    branches_.clear();
    if (kind_[root_] != NodeKind::Sum) return;
    const auto kids = children(root_);
    if (std::none_of(kids.begin(), kids.end(), [&](NodeId c) { return gated_[c]; })) return;
    std::vector<std::uint8_t> below(num_nodes());
    for (NodeId child : kids) {
      std::fill(below.begin(), below.end(), 0);
      below[child] = 1;
      for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
        if (!below[*it]) continue;
        for (NodeId c : children(*it)) below[c] = 1;
      }
      std::vector<NodeId> order;
      for (NodeId v : topo_)
        if (below[v]) order.push_back(v);
      branches_.push_back(std::move(order));
    }
  }

  void check_weights() const {
    for (NodeId i = 0; i < num_nodes(); ++i) {
      if (kind_[i] != NodeKind::Sum) continue;
      for (double w : weights(i)) {
        if (!std::isfinite(w) || w < 0.0) {
          throw Error(ErrorKind::InvalidParams,
                      "sum node " + std::to_string(i) + " has a negative or non-finite weight");
        }
      }
    }
  }

  // Iterative three-colour DFS over every node, so cycles are found even in
  // parts the root does not reach.
  void sort_topologically() {
    const std::size_t n = num_nodes();
    enum : std::uint8_t { kWhite, kGrey, kBlack };
    std::vector<std::uint8_t> colour(n, kWhite);
    std::vector<NodeId> order;
    order.reserve(n);
    std::vector<std::pair<NodeId, std::uint32_t>> stack;
    auto visit = [&](NodeId start) {
      if (colour[start] != kWhite) return;
      stack.emplace_back(start, first_edge(start));
      colour[start] = kGrey;
      while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < end_edge(node)) {
          const NodeId child = edge_child_[next++];
          if (colour[child] == kGrey) {
            throw Error(ErrorKind::CyclicGraph,
                        "cycle through node " + std::to_string(child));
          }
          if (colour[child] == kWhite) {
            colour[child] = kGrey;
            stack.emplace_back(child, first_edge(child));
          }
        } else {
          colour[node] = kBlack;
          order.push_back(node);
          stack.pop_back();
        }
      }
    };
    visit(root_);
    topo_ = order;
    reachable_.assign(n, false);
    for (NodeId v : topo_) reachable_[v] = true;
    for (NodeId i = 0; i < n; ++i) visit(i);
  }

  void refresh_log_weights() {
    log_weight_.resize(weight_.size());
    for (std::size_t e = 0; e < weight_.size(); ++e) {
      log_weight_[e] = weight_[e] > 0.0 ? std::log(weight_[e]) : kLogZero;
    }
  }

  std::vector<std::uint32_t> cards_;
  std::vector<NodeKind> kind_;
  std::vector<VariableId> var_;
  std::vector<std::uint32_t> val_;
  std::vector<std::uint32_t> edge_begin_;
  std::vector<NodeId> edge_child_;
  std::vector<double> weight_;
  std::vector<double> log_weight_;
  std::vector<NodeId> topo_;
  std::vector<bool> reachable_;
  std::vector<bool> gated_;
  std::vector<std::vector<NodeId>> branches_;
  NodeId root_ = 0;
};

/// Appends nodes to an arena; indicators are shared per (variable, value).
class SpnBuilder {
 public:
  explicit SpnBuilder(std::vector<std::uint32_t> cardinalities) {
    g_.cards_ = std::move(cardinalities);
    g_.edge_begin_.push_back(0);
  }

  std::size_t num_vars() const { return g_.cards_.size(); }
  std::uint32_t cardinality(VariableId v) const { return g_.cards_.at(v); }
  std::size_t num_nodes() const { return g_.kind_.size(); }

  /// Appends a variable and returns its id.
  VariableId add_variable(std::uint32_t cardinality) {
    g_.cards_.push_back(cardinality);
    return static_cast<VariableId>(g_.cards_.size() - 1);
  }

  NodeId indicator(VariableId var, std::uint32_t value) {
    const auto key = std::pair{var, value};
    if (auto it = indicators_.find(key); it != indicators_.end()) return it->second;
    const NodeId id = append(NodeKind::Indicator, var, value);
    g_.edge_begin_.push_back(static_cast<std::uint32_t>(g_.edge_child_.size()));
    indicators_.emplace(key, id);
    return id;
  }

  NodeId add_sum(std::span<const NodeId> children, std::span<const double> weights) {
    if (children.size() != weights.size()) {
      throw Error(ErrorKind::InvalidParams, "sum children/weights size mismatch");
    }
    const NodeId id = append(NodeKind::Sum, 0, 0);
    g_.edge_child_.insert(g_.edge_child_.end(), children.begin(), children.end());
    g_.weight_.insert(g_.weight_.end(), weights.begin(), weights.end());
    g_.edge_begin_.push_back(static_cast<std::uint32_t>(g_.edge_child_.size()));
    return id;
  }

  NodeId add_product(std::span<const NodeId> children) {
    const NodeId id = append(NodeKind::Product, 0, 0);
    g_.edge_child_.insert(g_.edge_child_.end(), children.begin(), children.end());
    g_.weight_.insert(g_.weight_.end(), children.size(), 1.0);
    g_.edge_begin_.push_back(static_cast<std::uint32_t>(g_.edge_child_.size()));
    return id;
  }

  SpnGraph build(NodeId root) && {
    g_.root_ = root;
    g_.finalize();
    return std::move(g_);
  }

 private:
  NodeId append(NodeKind kind, VariableId var, std::uint32_t value) {
    g_.kind_.push_back(kind);
    g_.var_.push_back(var);
    g_.val_.push_back(value);
    return static_cast<NodeId>(g_.kind_.size() - 1);
  }

  SpnGraph g_;
  std::map<std::pair<VariableId, std::uint32_t>, NodeId> indicators_;
};

struct CompletenessViolation {
  NodeId sum;
  std::size_t child_position;  // first child whose scope differs from child 0
  std::vector<VariableId> expected_scope;
  std::vector<VariableId> child_scope;
};

struct DecomposabilityViolation {
  NodeId product;
  std::vector<VariableId> overlap;
};

struct ValidityReport {
  std::vector<CompletenessViolation> completeness;
  std::vector<DecomposabilityViolation> decomposability;
  std::vector<NodeId> unreachable;

  bool valid() const {
    return completeness.empty() && decomposability.empty() && unreachable.empty();
  }
};

/// Checks completeness (sum children share one scope), decomposability
/// (product children have pairwise disjoint scopes) and that the root
/// reaches every node. Cycles and dangling references are rejected when the
/// graph is constructed.
inline ValidityReport validate(const SpnGraph& graph) {
  ValidityReport report;
  const auto scopes = graph.compute_scopes();
  for (NodeId n : graph.topo_order()) {
    const auto kids = graph.children(n);
    if (graph.kind(n) == NodeKind::Sum) {
      for (std::size_t i = 1; i < kids.size(); ++i) {
        if (!(scopes[kids[i]] == scopes[kids[0]])) {
          report.completeness.push_back(
              {n, i, scopes[kids[0]].to_vector(), scopes[kids[i]].to_vector()});
          break;
        }
      }
    } else if (graph.kind(n) == NodeKind::Product) {
      VarSet seen(graph.num_vars());
      VarSet overlap(graph.num_vars());
      bool overlapping = false;
      for (NodeId c : kids) {
        if (seen.intersects(scopes[c])) {
          overlap |= seen.intersection(scopes[c]);
          overlapping = true;
        }
        seen |= scopes[c];
      }
      if (overlapping) report.decomposability.push_back({n, overlap.to_vector()});
    }
  }
  for (NodeId n = 0; n < graph.num_nodes(); ++n) {
    if (!graph.reachable(n)) report.unreachable.push_back(n);
  }
  return report;
}

/// Rescales each sum's weights to sum to one.
inline SpnGraph normalize_weights(SpnGraph graph) {
  std::vector<double> w(graph.edge_weights().begin(), graph.edge_weights().end());
  for (NodeId n = 0; n < graph.num_nodes(); ++n) {
    if (graph.kind(n) != NodeKind::Sum) continue;
    double total = 0.0;
    for (auto e = graph.first_edge(n); e < graph.end_edge(n); ++e) total += w[e];
    if (!(total > 0.0)) {
      throw Error(ErrorKind::DegenerateSum, "sum node " + std::to_string(n) + " has only zero weights");
    }
    for (auto e = graph.first_edge(n); e < graph.end_edge(n); ++e) w[e] /= total;
  }
  graph.set_edge_weights(w);
  return graph;
}

/// FNV-1a over the bit patterns of every edge weight; identifies a trained
/// weight vector in experiment outputs.
inline std::uint64_t weight_hash(const SpnGraph& graph) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double w : graph.edge_weights()) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof w);
    __builtin_memcpy(&bits, &w, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace dgsm::spn
