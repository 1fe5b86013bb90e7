#include <gtest/gtest.h>

#include <vector>

#include "dgsm/spn/generate.hpp"
#include "dgsm/spn/graph.hpp"

using namespace dgsm;
using namespace dgsm::spn;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

}  // namespace

TEST(Graph, SumOverSameVariableIsValid) {
  const std::vector<NodeSpec> nodes = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                       NodeSpec::sum({0, 1}, {0.4, 0.6})};
  const SpnGraph g({2}, nodes, 2);
  EXPECT_TRUE(validate(g).valid());
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.count(NodeKind::Indicator), 2u);
}

TEST(Graph, CompletenessViolationReported) {
  // sum(x1, x1*x2): scopes {1} and {1,2}
  const std::vector<NodeSpec> nodes = {NodeSpec::indicator(0, 0), NodeSpec::indicator(1, 0),
                                       NodeSpec::product({0, 1}), NodeSpec::sum({0, 2}, {0.5, 0.5})};
  const SpnGraph g({2, 2}, nodes, 3);
  const auto r = validate(g);
  ASSERT_EQ(r.completeness.size(), 1u);
  EXPECT_EQ(r.completeness[0].sum, 3u);
  EXPECT_EQ(r.completeness[0].child_position, 1u);
  EXPECT_EQ(r.completeness[0].expected_scope, (std::vector<VariableId>{0}));
  EXPECT_EQ(r.completeness[0].child_scope, (std::vector<VariableId>{0, 1}));
  EXPECT_TRUE(r.decomposability.empty());
  EXPECT_FALSE(r.valid());
}

TEST(Graph, DecomposabilityViolationReported) {
  const std::vector<NodeSpec> nodes = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                       NodeSpec::product({0, 1})};
  const SpnGraph g({2}, nodes, 2);
  const auto r = validate(g);
  ASSERT_EQ(r.decomposability.size(), 1u);
  EXPECT_EQ(r.decomposability[0].product, 2u);
  EXPECT_EQ(r.decomposability[0].overlap, (std::vector<VariableId>{0}));
}

TEST(Graph, UnreachableNodeReported) {
  const std::vector<NodeSpec> nodes = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                       NodeSpec::sum({0, 1}, {0.5, 0.5}), NodeSpec::sum({0, 1}, {0.5, 0.5})};
  const SpnGraph g({2}, nodes, 2);
  const auto r = validate(g);
  EXPECT_EQ(r.unreachable, (std::vector<NodeId>{3}));
  EXPECT_FALSE(r.valid());
}

TEST(Graph, CycleRejected) {
  const std::vector<NodeSpec> nodes = {NodeSpec::indicator(0, 0), NodeSpec::product({0, 2}),
                                       NodeSpec::product({1})};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, nodes, 2); }), ErrorKind::CyclicGraph);
}

TEST(Graph, SelfLoopRejected) {
  const std::vector<NodeSpec> nodes = {NodeSpec::indicator(0, 0), NodeSpec::product({0, 1})};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, nodes, 1); }), ErrorKind::CyclicGraph);
}

TEST(Graph, DanglingReferencesRejected) {
  const std::vector<NodeSpec> child = {NodeSpec::indicator(0, 0), NodeSpec::product({0, 7})};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, child, 1); }), ErrorKind::DanglingReference);
  const std::vector<NodeSpec> ok = {NodeSpec::indicator(0, 0)};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, ok, 5); }), ErrorKind::DanglingReference);
  const std::vector<NodeSpec> var = {NodeSpec::indicator(3, 0)};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, var, 0); }), ErrorKind::DanglingReference);
  const std::vector<NodeSpec> val = {NodeSpec::indicator(0, 2)};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, val, 0); }), ErrorKind::DanglingReference);
}

TEST(Graph, MalformedNodesRejected) {
  const std::vector<NodeSpec> empty = {NodeSpec::product({})};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, empty, 0); }), ErrorKind::InvalidParams);
  const std::vector<NodeSpec> mismatch = {NodeSpec::indicator(0, 0), NodeSpec::sum({0}, {0.5, 0.5})};
  EXPECT_EQ(kind_of([&] { SpnGraph({2}, mismatch, 1); }), ErrorKind::InvalidParams);
  const std::vector<NodeSpec> unary = {NodeSpec::indicator(0, 0)};
  EXPECT_EQ(kind_of([&] { SpnGraph({1}, unary, 0); }), ErrorKind::InvalidParams);
}

TEST(Graph, NegativeOrNonFiniteWeightsRejected) {
  const std::vector<NodeSpec> neg = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                     NodeSpec::sum({0, 1}, {-0.5, 1.5})};
  EXPECT_ANY_THROW(SpnGraph({2}, neg, 2));
  const std::vector<NodeSpec> nan = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                     NodeSpec::sum({0, 1}, {std::nan(""), 1.0})};
  EXPECT_ANY_THROW(SpnGraph({2}, nan, 2));
}

TEST(Graph, TopologicalOrderPutsChildrenFirst) {
  const auto g = generate_random_spn(std::vector<std::uint32_t>(9, 2), {2, 3, 2, 0, 5});
  const auto topo = g.topo_order();
  ASSERT_EQ(topo.size(), g.num_nodes());
  std::vector<std::size_t> pos(g.num_nodes());
  for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = i;
  for (NodeId n = 0; n < g.num_nodes(); ++n)
    for (NodeId c : g.children(n)) EXPECT_LT(pos[c], pos[n]);
  EXPECT_EQ(topo.back(), g.root());
}

TEST(Graph, ScopesOfRootCoverAllVariables) {
  const auto g = generate_random_spn(std::vector<std::uint32_t>(7, 3), {1, 2, 3, 0, 1});
  const auto scopes = g.compute_scopes();
  EXPECT_EQ(scopes[g.root()].count(), 7u);
}

TEST(Graph, NormalizeExamples) {
  const std::vector<NodeSpec> a = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                   NodeSpec::sum({0, 1}, {2.0, 2.0})};
  const auto ga = normalize_weights(SpnGraph({2}, a, 2));
  EXPECT_NEAR(ga.weights(2)[0], 0.5, 1e-12);
  EXPECT_NEAR(ga.weights(2)[1], 0.5, 1e-12);

  const std::vector<NodeSpec> b = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1), NodeSpec::indicator(0, 2),
                                   NodeSpec::sum({0, 1, 2}, {1.0, 0.0, 3.0})};
  const auto gb = normalize_weights(SpnGraph({3}, b, 3));
  EXPECT_NEAR(gb.weights(3)[0], 0.25, 1e-12);
  EXPECT_EQ(gb.weights(3)[1], 0.0);
  EXPECT_NEAR(gb.weights(3)[2], 0.75, 1e-12);
}

TEST(Graph, NormalizeIsIdempotent) {
  const auto g = generate_random_spn(std::vector<std::uint32_t>(6, 2), {2, 2, 3, 0, 11});
  const auto once = normalize_weights(g);
  const auto twice = normalize_weights(once);
  const auto w1 = once.edge_weights(), w2 = twice.edge_weights();
  ASSERT_EQ(w1.size(), w2.size());
  for (std::size_t e = 0; e < w1.size(); ++e) EXPECT_NEAR(w1[e], w2[e], 1e-15);
  for (NodeId n = 0; n < once.num_nodes(); ++n) {
    if (once.kind(n) != NodeKind::Sum) continue;
    double s = 0;
    for (double w : once.weights(n)) s += w;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Graph, NormalizeDegenerateSum) {
  const std::vector<NodeSpec> z = {NodeSpec::indicator(0, 0), NodeSpec::indicator(0, 1),
                                   NodeSpec::sum({0, 1}, {0.0, 0.0})};
  EXPECT_EQ(kind_of([&] { normalize_weights(SpnGraph({2}, z, 2)); }), ErrorKind::DegenerateSum);
}

TEST(Graph, SetEdgeWeightsChecksShape) {
  auto g = generate_random_spn({2, 2}, {1, 2, 2, 0, 1});
  std::vector<double> w(g.num_edges() + 1, 0.5);
  EXPECT_EQ(kind_of([&] { g.set_edge_weights(w); }), ErrorKind::ShapeMismatch);
}

TEST(Graph, WeightHashTracksWeights) {
  auto g = generate_random_spn(std::vector<std::uint32_t>(4, 2), {1, 2, 2, 0, 3});
  const auto h0 = weight_hash(g);
  EXPECT_EQ(h0, weight_hash(generate_random_spn(std::vector<std::uint32_t>(4, 2), {1, 2, 2, 0, 3})));
  std::vector<double> w(g.edge_weights().begin(), g.edge_weights().end());
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    if (g.kind(n) == NodeKind::Sum) {
      std::swap(w[g.first_edge(n)], w[g.first_edge(n) + 1]);
      break;
    }
  }
  g.set_edge_weights(w);
  EXPECT_NE(h0, weight_hash(g));
}

TEST(Graph, BuilderSharesIndicators) {
  SpnBuilder b({2, 2});
  const NodeId a = b.indicator(0, 1);
  EXPECT_EQ(a, b.indicator(0, 1));
  EXPECT_NE(a, b.indicator(1, 1));
  const VariableId v = b.add_variable(4);
  EXPECT_EQ(v, 2u);
  EXPECT_EQ(b.cardinality(v), 4u);
  const double w[] = {1.0};
  const NodeId kids[] = {a, b.indicator(0, 0)};
  EXPECT_ANY_THROW(b.add_sum(kids, w));
}
