#pragma once

// Small hand-built networks shared by the tests.

#include <vector>

#include "dgsm/rng.hpp"
#include "dgsm/spn/graph.hpp"
#include "dgsm/spn/inference.hpp"

namespace toy {

using dgsm::spn::NodeId;
using dgsm::spn::NodeSpec;
using dgsm::spn::SpnGraph;

/// Mixture of K fully factorized components over n binary variables.
/// theta[k][v] = P(X_v = 1 | component k). Node layout: 2n indicators
/// (var v value b at 2v + b), then per component n leaf sums and one product,
/// then the root sum.
inline SpnGraph naive_bayes_mixture(const std::vector<double>& mix, const std::vector<std::vector<double>>& theta) {
  const std::size_t n = theta.front().size();
  std::vector<NodeSpec> nodes;
  for (std::size_t v = 0; v < n; ++v) {
    nodes.push_back(NodeSpec::indicator(static_cast<dgsm::spn::VariableId>(v), 0));
    nodes.push_back(NodeSpec::indicator(static_cast<dgsm::spn::VariableId>(v), 1));
  }
  std::vector<NodeId> products;
  for (const auto& t : theta) {
    std::vector<NodeId> leaves;
    for (std::size_t v = 0; v < n; ++v) {
      leaves.push_back(static_cast<NodeId>(nodes.size()));
      nodes.push_back(NodeSpec::sum({static_cast<NodeId>(2 * v), static_cast<NodeId>(2 * v + 1)}, {1.0 - t[v], t[v]}));
    }
    products.push_back(static_cast<NodeId>(nodes.size()));
    nodes.push_back(NodeSpec::product(leaves));
  }
  nodes.push_back(NodeSpec::sum(products, mix));
  return SpnGraph(std::vector<std::uint32_t>(n, 2), nodes, static_cast<NodeId>(nodes.size() - 1));
}

/// Index of component k's product node in naive_bayes_mixture.
inline NodeId component_product(std::size_t n, std::size_t k) {
  return static_cast<NodeId>(2 * n + k * (n + 1) + n);
}

/// Draws n complete samples from the mixture naive_bayes_mixture(mix, theta)
/// describes; `component` receives each sample's generating component.
inline std::vector<dgsm::spn::Evidence> sample_naive_bayes(const std::vector<double>& mix,
                                                           const std::vector<std::vector<double>>& theta, std::size_t n,
                                                           dgsm::Rng& rng, std::vector<std::size_t>* component = nullptr) {
  std::vector<dgsm::spn::Evidence> out;
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < mix.size() && u >= mix[k]) u -= mix[k++];
    dgsm::spn::Evidence ev(theta[k].size());
    for (std::size_t v = 0; v < theta[k].size(); ++v)
      ev.observe(static_cast<dgsm::spn::VariableId>(v), rng.bernoulli(theta[k][v]) ? 1 : 0);
    out.push_back(std::move(ev));
    if (component) component->push_back(k);
  }
  return out;
}

/// Random simplex of size k with every entry at least 0.1 before normalizing.
inline std::vector<double> random_simplex(std::size_t k, dgsm::Rng& rng) {
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& x : w) total += (x = 0.1 + rng.uniform());
  for (auto& x : w) x /= total;
  return w;
}

/// naive_bayes_mixture with random mixing and leaf weights.
inline SpnGraph random_naive_bayes(std::size_t components, std::size_t n, dgsm::Rng& rng) {
  std::vector<std::vector<double>> theta(components, std::vector<double>(n));
  for (auto& t : theta)
    for (auto& x : t) x = random_simplex(2, rng)[1];
  return naive_bayes_mixture(random_simplex(components, rng), theta);
}

/// P(X_v = 1 | component k) read off a naive_bayes_mixture graph.
inline double leaf_theta(const SpnGraph& g, std::size_t n, std::size_t k, std::size_t v) {
  const NodeId leaf = component_product(n, k) - static_cast<NodeId>(n) + static_cast<NodeId>(v);
  return g.weights(leaf)[1];
}

}  // namespace toy
