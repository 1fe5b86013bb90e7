#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/grid/polar.hpp"
#include "dgsm/rng.hpp"
#include "dgsm/spn/generate.hpp"
#include "dgsm/spn/graph.hpp"
#include "dgsm/spn/inference.hpp"
#include "dgsm/spn/serialize.hpp"

namespace dgsm {

inline std::vector<std::string> default_classes() {
  return {"corridor", "doorway", "small_office", "large_office"};
}

struct DgsmParams {
  std::size_t num_views = 8;
  spn::DecompositionParams view_params{1, 2, 4, 0, 0};
  std::size_t view_top_sums = 14;
  spn::DecompositionParams class_params{4, 5, 2, 0, 0};
  std::vector<std::string> classes = default_classes();
  spn::WeightInit init = spn::WeightInit::Random;
};

/// The class variable Y attached to the root sum: child c of the root is the
/// class-c sub-SPN multiplied by the indicator [Y = c].
struct ClassLatent {
  spn::VariableId variable = 0;
  std::vector<std::string> labels;

  std::uint32_t index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw Error(ErrorKind::UnknownLabel, "unknown class label '" + label + "'");
    return static_cast<std::uint32_t>(it - labels.begin());
  }
  const std::string& label_of(std::uint32_t index) const {
    if (index >= labels.size()) {
      throw Error(ErrorKind::UnknownLabel, "class index " + std::to_string(index) + " out of range");
    }
    return labels[index];
  }
  std::size_t num_classes() const { return labels.size(); }

  bool operator==(const ClassLatent&) const = default;
};

/// A DGSM: graph over the polar cells plus Y, the class mapping, and the
/// grid layout its cell variables follow.
struct DgsmModel {
  spn::SpnGraph graph;
  ClassLatent latent;
  grid::PolarGridSpec spec;
  std::size_t num_views = 0;
};

/// Variables of view v: every ring of angular bins [v*A/V, (v+1)*A/V).
inline std::vector<spn::VariableId> view_cells(const grid::PolarGridSpec& spec, std::size_t num_views,
                                               std::size_t view) {
  const std::size_t width = spec.angular_bins / num_views;
  std::vector<spn::VariableId> out;
  for (std::size_t a = view * width; a < (view + 1) * width; ++a)
    for (std::size_t r = 0; r < spec.radial_bins; ++r) out.push_back(static_cast<spn::VariableId>(spec.index(a, r)));
  return out;
}

/// Assembles the full model: one random sub-SPN per angular view (each with
/// view_top_sums outputs), one random sub-SPN per class over the view
/// outputs with each view's output set kept as an indivisible unit, and a
/// root sum over the class sub-SPNs gated by Y. Pure function of
/// (spec, params, seed).
inline DgsmModel build_dgsm(const grid::PolarGridSpec& spec, const DgsmParams& params, std::uint64_t seed) {
  spec.check();
  if (params.num_views == 0 || spec.angular_bins % params.num_views != 0) {
    throw Error(ErrorKind::InvalidParams, std::to_string(params.num_views) +
                                              " views do not divide " + std::to_string(spec.angular_bins) +
                                              " angular bins");
  }
  if (params.classes.empty()) throw Error(ErrorKind::InvalidParams, "at least one class is required");
  if (params.view_top_sums == 0) throw Error(ErrorKind::InvalidParams, "view_top_sums must be >= 1");

  Rng rng(seed);
  spn::SpnBuilder b(std::vector<std::uint32_t>(spec.num_cells(), grid::kOccupancyStates));

  std::vector<std::vector<spn::NodeId>> views;
  auto view_params = params.view_params;
  view_params.num_top_mixtures = params.view_top_sums;
  for (std::size_t v = 0; v < params.num_views; ++v) {
    const auto cells = view_cells(spec, params.num_views, v);
    views.push_back(spn::generate_random(b, cells, view_params, rng, params.init));
  }

  const auto y = b.add_variable(static_cast<std::uint32_t>(std::max<std::size_t>(params.classes.size(), 2)));
  auto class_params = params.class_params;
  class_params.num_subsets = std::min(class_params.num_subsets, params.num_views);
  class_params.num_top_mixtures = 1;
  std::vector<spn::NodeId> gated;
  for (std::size_t c = 0; c < params.classes.size(); ++c) {
    auto outs = spn::generate_over_blocks(b, views, class_params, rng, params.init);
    spn::NodeId class_root = outs.front();
    if (outs.size() > 1) {
      class_root = b.add_sum(outs, spn::detail::initial_weights(outs.size(), params.init, rng));
    }
    const spn::NodeId ind = b.indicator(y, static_cast<std::uint32_t>(c));
    const spn::NodeId kids[] = {class_root, ind};
    gated.push_back(b.add_product(kids));
  }
  const std::vector<double> prior(gated.size(), 1.0 / static_cast<double>(gated.size()));
  const spn::NodeId root = b.add_sum(gated, prior);

  return DgsmModel{std::move(b).build(root), ClassLatent{y, params.classes}, spec, params.num_views};
}

/// Extends cell evidence with Y: observed at the label's index, or
/// marginalized when no label is given.
inline spn::Evidence attach_class_evidence(spn::Evidence evidence, const ClassLatent& latent,
                                           const std::optional<std::string>& label) {
  const std::int32_t raw = label ? static_cast<std::int32_t>(latent.index_of(*label)) : spn::Evidence::kMarginalized;
  if (evidence.size() == latent.variable) {
    evidence.append(raw);
  } else if (evidence.size() == static_cast<std::size_t>(latent.variable) + 1) {
    if (label) {
      evidence.observe(latent.variable, static_cast<std::uint32_t>(raw));
    } else {
      evidence.marginalize(latent.variable);
    }
  } else {
    throw Error(ErrorKind::ShapeMismatch, "evidence has " + std::to_string(evidence.size()) +
                                              " variables; class variable is " + std::to_string(latent.variable));
  }
  return evidence;
}

// A model on disk is the SPN text file plus a sidecar "<path>.meta":
//   dgsm-meta v1
//   latent <variable>
//   grid <angular_bins> <radial_bins> <radius>
//   edges <r_1> ... <r_n>
//   views <count>
//   classes <label...>

inline void save_model(const std::string& path, const DgsmModel& m) {
  spn::save_spn(path, m.graph);
  std::ofstream out(path + ".meta");
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path + ".meta");
  out << "dgsm-meta v1\nlatent " << m.latent.variable << "\ngrid " << m.spec.angular_bins << ' '
      << m.spec.radial_bins << ' ' << spn::format_double(m.spec.radius) << "\nedges";
  for (double e : m.spec.radial_edges) out << ' ' << spn::format_double(e);
  out << "\nviews " << m.num_views << "\nclasses";
  for (const auto& l : m.latent.labels) out << ' ' << l;
  out << '\n';
}

inline DgsmModel load_model(const std::string& path) {
  auto graph = spn::load_spn(path);
  std::ifstream in(path + ".meta");
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path + ".meta");
  ClassLatent latent;
  grid::PolarGridSpec spec;
  std::size_t views = 0;
  std::string line;
  std::getline(in, line);
  if (line != "dgsm-meta v1") throw Error(ErrorKind::ParseError, "bad model metadata header");
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "latent") {
      ls >> latent.variable;
    } else if (key == "grid") {
      ls >> spec.angular_bins >> spec.radial_bins >> spec.radius;
    } else if (key == "edges") {
      double e;
      while (ls >> e) spec.radial_edges.push_back(e);
    } else if (key == "views") {
      ls >> views;
    } else if (key == "classes") {
      std::string l;
      while (ls >> l) latent.labels.push_back(l);
    }
  }
  spec.check();
  if (latent.variable != spec.num_cells() || graph.num_vars() != spec.num_cells() + 1 ||
      latent.labels.empty() || graph.cardinality(latent.variable) < latent.labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "model metadata does not match the graph in " + path);
  }
  return DgsmModel{std::move(graph), std::move(latent), std::move(spec), views};
}

}  // namespace dgsm
