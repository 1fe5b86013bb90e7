#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/parallel.hpp"
#include "dgsm/rng.hpp"
#include "dgsm/spn/graph.hpp"
#include "dgsm/spn/inference.hpp"
#include "dgsm/spn/serialize.hpp"

namespace dgsm::spn {

struct TrainConfig {
  std::size_t iterations = 300;
  double smoothing = 0.1;  // Dirichlet pseudocount added to every sum edge
  std::uint64_t seed = 0;
  bool shuffle = false;    // visit samples in a seeded random order
  std::size_t threads = 0; // 0 = hardware concurrency
};

/// Selection counts per edge, accumulated over one EM iteration.
class CountAccumulator {
 public:
  CountAccumulator() = default;
  explicit CountAccumulator(std::size_t num_edges) : counts_(num_edges, 0.0) {}

  void add(const SumSelectionTrace& trace) {
    for (const auto& s : trace) counts_[s.edge] += 1.0;
  }
  void merge(const CountAccumulator& other) {
    for (std::size_t e = 0; e < counts_.size(); ++e) counts_[e] += other.counts_[e];
  }
  void reset() { std::fill(counts_.begin(), counts_.end(), 0.0); }

  std::span<const double> counts() const { return counts_; }
  std::span<double> counts() { return counts_; }

 private:
  std::vector<double> counts_;
};

/// Hard E step for one sample: sum-circuit upward pass, max-selection
/// downward pass.
inline SumSelectionTrace e_step(const SpnGraph& graph, const Evidence& sample, Workspace& ws,
                                double* log_prob = nullptr) {
  return augmented_mpe_pass(graph, sample, ws, log_prob);
}

/// Smoothed M step: for a sum with K children,
///   w_j = (count_j + alpha) / (sum_k count_k + K * alpha).
/// A sum whose denominator is zero (alpha = 0, never selected) becomes uniform.
/// Returns the full edge weight vector; product edges keep weight 1.
inline std::vector<double> m_step(const SpnGraph& graph, const CountAccumulator& acc, double alpha) {
  const auto counts = acc.counts();
  if (counts.size() != graph.num_edges()) {
    throw Error(ErrorKind::ShapeMismatch, "count vector does not match graph edges");
  }
  std::vector<double> w(graph.edge_weights().begin(), graph.edge_weights().end());
  for (NodeId n = 0; n < graph.num_nodes(); ++n) {
    if (graph.kind(n) != NodeKind::Sum) continue;
    const auto begin = graph.first_edge(n);
    const auto end = graph.end_edge(n);
    const double k = static_cast<double>(end - begin);
    double total = 0.0;
    for (auto e = begin; e < end; ++e) total += counts[e];
    const double denom = total + k * alpha;
    for (auto e = begin; e < end; ++e) {
      w[e] = denom > 0.0 ? (counts[e] + alpha) / denom : 1.0 / k;
    }
  }
  return w;
}

struct IterationLog {
  std::size_t iteration = 0;
  double mean_train_loglik = 0.0;  // after this iteration's M step
  double elapsed_ms = 0.0;
};

struct TrainResult {
  SpnGraph graph;
  double initial_mean_loglik = 0.0;
  std::vector<IterationLog> log;
  std::size_t fixed_point_iteration = 0;  // first iteration whose M step left the weights unchanged; 0 if none
};

/// Batch hard EM. Each iteration runs the E step on every sample against the
/// current weights, merges the per-worker counts in worker order (counts are
/// integral, so the sum is exact and order-free), then applies the M step.
/// The log-likelihood after iteration k is read off the upward passes of
/// iteration k + 1; one extra pass scores the final weights.
///
/// The M step depends only on the counts, so once it reproduces the current
/// weights every later iteration repeats the same E step bit for bit. Those
/// iterations are logged without being recomputed.
inline TrainResult train(SpnGraph graph, std::span<const Evidence> data, const TrainConfig& config,
                         const std::function<void(const IterationLog&)>& progress = {}) {
  if (data.empty()) throw Error(ErrorKind::InvalidParams, "training set is empty");
  if (config.iterations < 1) throw Error(ErrorKind::InvalidParams, "iterations must be >= 1");
  if (!(config.smoothing >= 0.0)) throw Error(ErrorKind::InvalidParams, "smoothing must be >= 0");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].size() != graph.num_vars()) {
      throw Error(ErrorKind::ShapeMismatch, "sample " + std::to_string(i) + " has " +
                                                std::to_string(data[i].size()) +
                                                " variables, model expects " +
                                                std::to_string(graph.num_vars()));
    }
    check_evidence(graph, data[i]);
  }

  const std::size_t workers = std::min(resolve_threads(config.threads), data.size());
  std::vector<Workspace> spaces(workers);
  std::vector<CountAccumulator> partial(workers, CountAccumulator(graph.num_edges()));
  std::vector<double> loglik(data.size());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  auto pass = [&](bool count) {
    if (config.shuffle) rng.shuffle(std::span(order));
    for (auto& p : partial) p.reset();
    parallel_for(data.size(), workers, [&](std::size_t i, std::size_t w) {
      const std::size_t s = order[i];
      if (count) {
        partial[w].add(e_step(graph, data[s], spaces[w], &loglik[s]));
      } else {
        loglik[s] = evaluate(graph, data[s], spaces[w]);
      }
    });
    double total = 0.0;
    for (double ll : loglik) total += ll;
    return total / static_cast<double>(data.size());
  };

  TrainResult result{graph, 0.0, {}, 0};
  const auto start = std::chrono::steady_clock::now();
  auto ms_since_start = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  CountAccumulator counts(graph.num_edges());
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const double mean = pass(true);
    if (it == 1) {
      result.initial_mean_loglik = mean;
    } else {
      result.log.back().mean_train_loglik = mean;
      if (progress) progress(result.log.back());
    }
    counts.reset();
    for (const auto& p : partial) counts.merge(p);
    const auto weights = m_step(graph, counts, config.smoothing);
    const auto current = graph.edge_weights();
    if (std::equal(weights.begin(), weights.end(), current.begin(), current.end())) {
      result.fixed_point_iteration = it;
      for (std::size_t k = it; k <= config.iterations; ++k) {
        result.log.push_back({k, mean, ms_since_start()});
        if (progress) progress(result.log.back());
      }
      result.graph = std::move(graph);
      return result;
    }
    graph.set_edge_weights(weights);
    result.log.push_back({it, 0.0, ms_since_start()});
  }
  result.log.back().mean_train_loglik = pass(false);
  if (progress) progress(result.log.back());
  result.graph = std::move(graph);
  return result;
}

inline void write_training_log_csv(std::ostream& out, std::span<const IterationLog> log) {
  out << "iteration,mean_train_loglik,elapsed_ms\n";
  for (const auto& row : log) {
    out << row.iteration << ',' << format_double(row.mean_train_loglik) << ',' << row.elapsed_ms << '\n';
  }
}

}  // namespace dgsm::spn
