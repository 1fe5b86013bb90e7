#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <vector>

#include "dgsm/model.hpp"
#include "dgsm/rng.hpp"
#include "dgsm/spn/generate.hpp"
#include "dgsm/spn/inference.hpp"
#include "dgsm/spn/serialize.hpp"

using namespace dgsm;
using namespace dgsm::spn;

namespace {

std::vector<VariableId> iota_vars(std::size_t n) {
  std::vector<VariableId> v(n);
  for (VariableId i = 0; i < n; ++i) v[i] = i;
  return v;
}

const DgsmModel& default_model() {
  static const DgsmModel m = build_dgsm(grid::PolarGridSpec::make_default(), DgsmParams{}, 42);
  return m;
}

}  // namespace

TEST(Generate, SingletonBaseCase) {
  SpnBuilder b({2});
  Rng rng(1);
  const auto vars = iota_vars(1);
  const auto outs = generate_random(b, vars, {1, 2, 4, 0, 0}, rng);
  ASSERT_EQ(outs.size(), 4u);
  const auto g = std::move(b).build(outs[0]);
  for (NodeId s : outs) {
    EXPECT_EQ(g.kind(s), NodeKind::Sum);
    const auto kids = g.children(s);
    ASSERT_EQ(kids.size(), 2u);
    for (std::uint32_t v = 0; v < 2; ++v) {
      EXPECT_EQ(g.kind(kids[v]), NodeKind::Indicator);
      EXPECT_EQ(g.indicator_variable(kids[v]), 0u);
      EXPECT_EQ(g.indicator_value(kids[v]), v);
    }
  }
}

TEST(Generate, TwoVariableCounting) {
  SpnBuilder b({2, 2});
  Rng rng(3);
  const auto vars = iota_vars(2);
  const auto outs = generate_random(b, vars, {1, 2, 2, 0, 0}, rng);
  ASSERT_EQ(outs.size(), 2u);
  const NodeId root = b.add_sum(outs, std::vector<double>{0.5, 0.5});
  const auto g = std::move(b).build(root);
  EXPECT_EQ(g.count(NodeKind::Product), 4u);
  for (NodeId s : outs) {
    ASSERT_EQ(g.children(s).size(), 4u);
    for (NodeId c : g.children(s)) EXPECT_EQ(g.kind(c), NodeKind::Product);
  }
  // First product combines the first mixture of each subset.
  const auto first = g.children(outs[0])[0];
  const auto kids = g.children(first);
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_TRUE(validate(g).valid());
}

TEST(Generate, SubsetsExceedingSetSize) {
  SpnBuilder b({2, 2});
  Rng rng(3);
  const auto vars = iota_vars(2);
  try {
    generate_random(b, vars, {1, 3, 2, 0, 0}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParams);
  }
  EXPECT_THROW(generate_random(b, vars, {0, 2, 2, 0, 0}, rng), Error);
  EXPECT_THROW(generate_random(b, vars, {1, 2, 0, 0, 0}, rng), Error);
  EXPECT_THROW(generate_random(b, std::span<const VariableId>{}, {1, 2, 2, 0, 0}, rng), Error);
}

TEST(Generate, ValidForManySeedsAndSizes) {
  Rng meta(2718);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + meta.below(64);
    DecompositionParams p;
    p.num_decompositions = 1 + meta.below(3);
    p.num_subsets = n == 1 ? 1 : 2 + meta.below(std::min<std::size_t>(n - 1, 4));
    p.num_mixtures = 1 + meta.below(4);
    p.seed = meta.next();
    const auto g = generate_random_spn(std::vector<std::uint32_t>(n, 2 + static_cast<std::uint32_t>(meta.below(3))), p);
    const auto report = validate(g);
    EXPECT_TRUE(report.valid()) << "n=" << n << " seed=" << p.seed;
    EXPECT_NEAR(evaluate(g, Evidence(n)), 0.0, 1e-9);
  }
}

TEST(Generate, ViewDefaultsReproducible) {
  const DecompositionParams p{1, 2, 4, 14, 99};
  const auto a = generate_random_spn(std::vector<std::uint32_t>(147, 3), p);
  const auto b = generate_random_spn(std::vector<std::uint32_t>(147, 3), p);
  EXPECT_TRUE(validate(a).valid());
  EXPECT_EQ(a.num_nodes(), b.num_nodes());
  EXPECT_EQ(a.num_edges(), b.num_edges());
  EXPECT_EQ(to_text(a), to_text(b));
  DecompositionParams q = p;
  q.seed = 100;
  EXPECT_NE(to_text(generate_random_spn(std::vector<std::uint32_t>(147, 3), q)), to_text(a));
}

TEST(Generate, UniformInitGivesEqualWeights) {
  const auto g = generate_random_spn(std::vector<std::uint32_t>(5, 2), {1, 2, 3, 0, 4}, WeightInit::Uniform);
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    if (g.kind(n) != NodeKind::Sum) continue;
    for (double w : g.weights(n)) EXPECT_DOUBLE_EQ(w, 1.0 / static_cast<double>(g.children(n).size()));
  }
}

TEST(Generate, BlocksAreIndivisibleUnits) {
  SpnBuilder b(std::vector<std::uint32_t>(6, 2));
  Rng rng(8);
  std::vector<std::vector<NodeId>> blocks;
  for (VariableId v = 0; v < 6; v += 2) {
    const VariableId vs[] = {v, v + 1};
    blocks.push_back(generate_random(b, vs, {1, 2, 2, 3, 0}, rng));
  }
  const auto outs = generate_over_blocks(b, blocks, {2, 3, 2, 1, 0}, rng);
  ASSERT_EQ(outs.size(), 1u);
  const auto g = std::move(b).build(outs[0]);
  EXPECT_TRUE(validate(g).valid());
  // Products at the top combine one output of each block.
  std::set<NodeId> block_outputs;
  for (const auto& bl : blocks) block_outputs.insert(bl.begin(), bl.end());
  for (NodeId p : g.children(outs[0])) {
    for (NodeId c : g.children(p)) EXPECT_TRUE(block_outputs.count(c));
  }
}

TEST(Dgsm, DefaultStructure) {
  const auto& m = default_model();
  const auto& g = m.graph;
  EXPECT_EQ(m.spec.num_cells(), 1176u);
  EXPECT_EQ(g.num_vars(), 1177u);
  EXPECT_EQ(m.latent.variable, 1176u);
  std::size_t cell_indicators = 0, y_indicators = 0;
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    if (g.kind(n) != NodeKind::Indicator) continue;
    (g.indicator_variable(n) == m.latent.variable ? y_indicators : cell_indicators)++;
  }
  EXPECT_EQ(cell_indicators, 1176u * 3);
  EXPECT_EQ(y_indicators, 4u);
  EXPECT_TRUE(validate(g).valid());
  EXPECT_EQ(g.children(g.root()).size(), 4u);
  EXPECT_NEAR(evaluate(g, Evidence(g.num_vars())), 0.0, 1e-9);
}

TEST(Dgsm, ViewSubSpnsHaveFourteenOutputsOverTheirCells) {
  const auto& m = default_model();
  const auto scopes = m.graph.compute_scopes();
  std::set<NodeId> all_view_sums;
  for (std::size_t v = 0; v < 8; ++v) {
    const auto cells = view_cells(m.spec, 8, v);
    ASSERT_EQ(cells.size(), 147u);
    VarSet want(m.graph.num_vars());
    for (auto c : cells) want.insert(c);
    std::size_t tops = 0;
    for (NodeId n = 0; n < m.graph.num_nodes(); ++n) {
      if (m.graph.kind(n) == NodeKind::Sum && scopes[n] == want) {
        ++tops;
        all_view_sums.insert(n);
      }
    }
    EXPECT_EQ(tops, 14u) << "view " << v;
  }
  EXPECT_EQ(all_view_sums.size(), 8u * 14);
}

TEST(Dgsm, DeterministicBySeed) {
  const auto again = build_dgsm(grid::PolarGridSpec::make_default(), DgsmParams{}, 42);
  EXPECT_EQ(to_text(again.graph), to_text(default_model().graph));
}

TEST(Dgsm, SingleClass) {
  DgsmParams p;
  p.classes = {"corridor"};
  p.view_params.num_mixtures = 2;
  p.view_top_sums = 2;
  const auto m = build_dgsm(grid::PolarGridSpec::make_default(), p, 1);
  EXPECT_EQ(m.graph.children(m.graph.root()).size(), 1u);
  EXPECT_TRUE(validate(m.graph).valid());
}

TEST(Dgsm, ParameterErrors) {
  DgsmParams p;
  p.num_views = 5;
  EXPECT_THROW(build_dgsm(grid::PolarGridSpec::make_default(), p, 1), Error);
  p = DgsmParams{};
  p.classes.clear();
  EXPECT_THROW(build_dgsm(grid::PolarGridSpec::make_default(), p, 1), Error);
  p = DgsmParams{};
  p.view_top_sums = 0;
  EXPECT_THROW(build_dgsm(grid::PolarGridSpec::make_default(), p, 1), Error);
}

TEST(Dgsm, AttachClassEvidence) {
  const auto& m = default_model();
  const Evidence cells(1176);
  const auto ev = attach_class_evidence(cells, m.latent, "corridor");
  ASSERT_EQ(ev.size(), 1177u);
  EXPECT_TRUE(ev.observed(1176));
  EXPECT_EQ(ev.value(1176), 0u);
  const auto marg = attach_class_evidence(ev, m.latent, std::nullopt);
  EXPECT_FALSE(marg.observed(1176));
  for (const auto& label : default_classes()) {
    EXPECT_EQ(m.latent.label_of(m.latent.index_of(label)), label);
    EXPECT_EQ(attach_class_evidence(cells, m.latent, label).value(1176), m.latent.index_of(label));
  }
  try {
    attach_class_evidence(cells, m.latent, "kitchen");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownLabel);
  }
  EXPECT_THROW(attach_class_evidence(Evidence(10), m.latent, "corridor"), Error);
  EXPECT_THROW(m.latent.label_of(9), Error);
}

TEST(Dgsm, ModelFileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "dgsm_model_test.spn").string();
  DgsmParams p;
  p.view_params.num_mixtures = 2;
  p.view_top_sums = 3;
  const auto m = build_dgsm(grid::PolarGridSpec::make_default(), p, 5);
  save_model(path, m);
  const auto back = load_model(path);
  EXPECT_EQ(to_text(back.graph), to_text(m.graph));
  EXPECT_EQ(back.latent, m.latent);
  EXPECT_EQ(back.spec, m.spec);
  EXPECT_EQ(back.num_views, 8u);
  std::filesystem::remove(path + ".meta");
  EXPECT_THROW(load_model(path), Error);
  std::filesystem::remove(path);
}
