#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/spn/graph.hpp"

namespace dgsm::spn {

/// Per-variable evidence: an observed category or marginalized out.
class Evidence {
 public:
  static constexpr std::int32_t kMarginalized = -1;

  Evidence() = default;
  explicit Evidence(std::size_t num_vars) : values_(num_vars, kMarginalized) {}

  static Evidence complete(std::span<const std::uint32_t> values) {
    Evidence e(values.size());
    for (std::size_t v = 0; v < values.size(); ++v) e.observe(static_cast<VariableId>(v), values[v]);
    return e;
  }

  std::size_t size() const { return values_.size(); }
  bool observed(VariableId v) const { return values_[v] != kMarginalized; }
  std::uint32_t value(VariableId v) const { return static_cast<std::uint32_t>(values_[v]); }
  std::int32_t raw(VariableId v) const { return values_[v]; }

  void observe(VariableId v, std::uint32_t value) { values_[v] = static_cast<std::int32_t>(value); }
  void marginalize(VariableId v) { values_[v] = kMarginalized; }

  /// Appends one variable and returns its id.
  VariableId append(std::int32_t raw_value = kMarginalized) {
    values_.push_back(raw_value);
    return static_cast<VariableId>(values_.size() - 1);
  }

  bool operator==(const Evidence&) const = default;

 private:
  std::vector<std::int32_t> values_;
};

/// Values chosen for a set of query variables, ordered by variable id.
using Assignment = std::map<VariableId, std::uint32_t>;

struct MpeResult {
  Assignment assignment;
  double log_value = kLogZero;  // max-circuit value of the completed evidence
};

/// One downward-pass decision: the sum node and the edge it selected.
struct SumSelection {
  NodeId sum;
  std::uint32_t child_position;
  std::uint32_t edge;

  bool operator==(const SumSelection&) const = default;
};

using SumSelectionTrace = std::vector<SumSelection>;

inline void check_evidence(const SpnGraph& graph, const Evidence& evidence) {
  if (evidence.size() != graph.num_vars()) {
    throw Error(ErrorKind::InvalidEvidence, "evidence covers " + std::to_string(evidence.size()) +
                                                " variables, graph has " +
                                                std::to_string(graph.num_vars()));
  }
  for (VariableId v = 0; v < evidence.size(); ++v) {
    if (evidence.observed(v) && evidence.value(v) >= graph.cardinality(v)) {
      throw Error(ErrorKind::InvalidEvidence, "variable " + std::to_string(v) + " observed as " +
                                                  std::to_string(evidence.value(v)) +
                                                  " but has cardinality " +
                                                  std::to_string(graph.cardinality(v)));
    }
  }
}

namespace detail {

inline double indicator_log_value(const SpnGraph& g, NodeId n, const Evidence& ev) {
  const VariableId v = g.indicator_variable(n);
  if (!ev.observed(v)) return 0.0;
  return ev.value(v) == g.indicator_value(n) ? 0.0 : kLogZero;
}

inline double log_sum_node(const SpnGraph& g, NodeId n, std::span<const double> values) {
  const auto begin = g.first_edge(n);
  const auto end = g.end_edge(n);
  double best = kLogZero;
  for (auto e = begin; e < end; ++e) {
    const double t = g.edge_log_weight(e) + values[g.edge_child(e)];
    if (t > best) best = t;
  }
  if (best == kLogZero) return kLogZero;
  double acc = 0.0;
  for (auto e = begin; e < end; ++e) {
    acc += std::exp(g.edge_log_weight(e) + values[g.edge_child(e)] - best);
  }
  return best + std::log(acc);
}

inline double log_max_node(const SpnGraph& g, NodeId n, std::span<const double> values) {
  double best = kLogZero;
  for (auto e = g.first_edge(n); e < g.end_edge(n); ++e) {
    const double t = g.edge_log_weight(e) + values[g.edge_child(e)];
    if (t > best) best = t;
  }
  return best;
}

inline double log_product_node(const SpnGraph& g, NodeId n, std::span<const double> values) {
  double acc = 0.0;
  for (auto e = g.first_edge(n); e < g.end_edge(n); ++e) acc += values[g.edge_child(e)];
  return acc;
}

/// Highest (log weight + child value) edge; lowest position wins ties.
inline std::uint32_t best_edge(const SpnGraph& g, NodeId n, std::span<const double> values) {
  std::uint32_t best_e = g.first_edge(n);
  double best = kLogZero;
  bool any = false;
  for (auto e = g.first_edge(n); e < g.end_edge(n); ++e) {
    const double t = g.edge_log_weight(e) + values[g.edge_child(e)];
    if (!any || t > best) {
      best = t;
      best_e = e;
      any = true;
    }
  }
  return best_e;
}

enum class SumMode { Sum, Max };

inline double node_value(const SpnGraph& g, NodeId n, const Evidence& ev, std::span<const double> values,
                         SumMode mode) {
  switch (g.kind(n)) {
    case NodeKind::Indicator: return indicator_log_value(g, n, ev);
    case NodeKind::Product: return log_product_node(g, n, values);
    case NodeKind::Sum: return mode == SumMode::Sum ? log_sum_node(g, n, values) : log_max_node(g, n, values);
  }
  return kLogZero;
}

// Index of the only root branch left open by the evidence, or -1 when the
// full order has to be evaluated.
inline long single_open_branch(const SpnGraph& g, const Evidence& ev) {
  if (g.root_branches().empty()) return -1;
  long open = -1;
  const auto kids = g.children(g.root());
  for (std::size_t i = 0; i < kids.size(); ++i) {
    bool closed = false;
    if (g.gated(kids[i])) {
      for (NodeId c : g.children(kids[i])) {
        if (g.kind(c) == NodeKind::Indicator && indicator_log_value(g, c, ev) == kLogZero) closed = true;
      }
    }
    if (closed) continue;
    if (open >= 0) return -1;
    open = static_cast<long>(i);
  }
  return open;
}

/// Upward pass in log space. Nodes not evaluated keep value log(0), which is
/// exact for every node the evidence cuts off.
inline double upward(const SpnGraph& g, const Evidence& ev, std::vector<double>& values, SumMode mode) {
  values.assign(g.num_nodes(), kLogZero);
  const long branch = single_open_branch(g, ev);
  if (branch >= 0) {
    for (NodeId n : g.root_branches()[static_cast<std::size_t>(branch)]) {
      values[n] = node_value(g, n, ev, values, mode);
    }
    values[g.root()] = node_value(g, g.root(), ev, values, mode);
  } else {
    for (NodeId n : g.topo_order()) values[n] = node_value(g, n, ev, values, mode);
  }
  return values[g.root()];
}

/// Downward selection from the root: arg-max child at sums, all children at
/// products. Calls on_sum(sum, edge) and on_leaf(indicator) once per reached node.
template <typename OnSum, typename OnLeaf>
void downward(const SpnGraph& g, std::span<const double> values, std::vector<std::uint8_t>& visited,
              OnSum&& on_sum, OnLeaf&& on_leaf) {
  visited.assign(g.num_nodes(), 0);
  std::vector<NodeId> stack{g.root()};
  visited[g.root()] = 1;
  auto push = [&](NodeId c) {
    if (!visited[c]) {
      visited[c] = 1;
      stack.push_back(c);
    }
  };
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    switch (g.kind(n)) {
      case NodeKind::Indicator:
        on_leaf(n);
        break;
      case NodeKind::Product:
        for (auto e = g.end_edge(n); e-- > g.first_edge(n);) push(g.edge_child(e));
        break;
      case NodeKind::Sum: {
        const std::uint32_t e = best_edge(g, n, values);
        on_sum(n, e);
        push(g.edge_child(e));
        break;
      }
    }
  }
}

}  // namespace detail

/// Reusable per-pass scratch buffers; one per thread.
struct Workspace {
  std::vector<double> values;
  std::vector<std::uint8_t> visited;
};

/// Log-probability of the evidence (sum-circuit upward pass in log space).
inline double evaluate(const SpnGraph& graph, const Evidence& evidence, Workspace& ws) {
  check_evidence(graph, evidence);
  return detail::upward(graph, evidence, ws.values, detail::SumMode::Sum);
}

inline double evaluate(const SpnGraph& graph, const Evidence& evidence) {
  Workspace ws;
  return evaluate(graph, evidence, ws);
}

/// Max-circuit value of the evidence (sums replaced by weighted maxes).
inline double evaluate_max(const SpnGraph& graph, const Evidence& evidence, Workspace& ws) {
  check_evidence(graph, evidence);
  return detail::upward(graph, evidence, ws.values, detail::SumMode::Max);
}

/// Most probable completion of the query variables. Query variables must be
/// marginalized in the evidence. Ties select the lowest child position.
inline MpeResult mpe_infer(const SpnGraph& graph, const Evidence& evidence,
                           std::span<const VariableId> query, Workspace& ws) {
  check_evidence(graph, evidence);
  for (VariableId q : query) {
    if (q >= graph.num_vars()) {
      throw Error(ErrorKind::InvalidEvidence, "query variable " + std::to_string(q) + " out of range");
    }
    if (evidence.observed(q)) {
      throw Error(ErrorKind::InvalidEvidence,
                  "query variable " + std::to_string(q) + " is observed in the evidence");
    }
  }
  MpeResult result;
  result.log_value = detail::upward(graph, evidence, ws.values, detail::SumMode::Max);
  if (query.empty()) return result;

  std::vector<std::uint8_t> wanted(graph.num_vars(), 0);
  for (VariableId q : query) wanted[q] = 1;
  detail::downward(
      graph, ws.values, ws.visited, [](NodeId, std::uint32_t) {},
      [&](NodeId leaf) {
        const VariableId v = graph.indicator_variable(leaf);
        if (wanted[v]) result.assignment.emplace(v, graph.indicator_value(leaf));
      });
  return result;
}

inline MpeResult mpe_infer(const SpnGraph& graph, const Evidence& evidence,
                           std::span<const VariableId> query) {
  Workspace ws;
  return mpe_infer(graph, evidence, query, ws);
}

/// Sum-circuit upward pass followed by a max-selection downward pass. The
/// trace lists every reached sum with its selected edge; this is the hard-EM
/// E step. Also reports the log-probability computed by the upward pass.
inline SumSelectionTrace augmented_mpe_pass(const SpnGraph& graph, const Evidence& evidence,
                                            Workspace& ws, double* log_prob = nullptr) {
  check_evidence(graph, evidence);
  const double lp = detail::upward(graph, evidence, ws.values, detail::SumMode::Sum);
  if (log_prob) *log_prob = lp;
  SumSelectionTrace trace;
  detail::downward(
      graph, ws.values, ws.visited,
      [&](NodeId sum, std::uint32_t e) {
        trace.push_back({sum, e - graph.first_edge(sum), e});
      },
      [](NodeId) {});
  return trace;
}

inline SumSelectionTrace augmented_mpe_pass(const SpnGraph& graph, const Evidence& evidence) {
  Workspace ws;
  return augmented_mpe_pass(graph, evidence, ws);
}

}  // namespace dgsm::spn
