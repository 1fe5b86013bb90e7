#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/grid/polar.hpp"
#include "dgsm/model.hpp"
#include "dgsm/spn/inference.hpp"

namespace dgsm::tasks {

struct Classification {
  std::uint32_t predicted = 0;
  std::vector<double> log_joint;  // log P(Y = c, x) per class
};

namespace detail {

inline void check_cells(const DgsmModel& model, const spn::Evidence& cells) {
  if (cells.size() != model.spec.num_cells()) {
    throw Error(ErrorKind::ShapeMismatch, "evidence has " + std::to_string(cells.size()) +
                                              " cells, model expects " + std::to_string(model.spec.num_cells()));
  }
}

inline double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == spn::kLogZero) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::uint32_t argmax(const std::vector<double>& xs) {
  return static_cast<std::uint32_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

}  // namespace detail

/// One conditioned upward pass per class; the prediction is the first class
/// with the largest log-joint. Cells may be marginalized.
inline Classification classify(const DgsmModel& model, const spn::Evidence& cells, spn::Workspace& ws) {
  detail::check_cells(model, cells);
  Classification out;
  for (std::size_t c = 0; c < model.latent.num_classes(); ++c) {
    const auto ev = attach_class_evidence(cells, model.latent, model.latent.labels[c]);
    out.log_joint.push_back(spn::evaluate(model.graph, ev, ws));
  }
  out.predicted = detail::argmax(out.log_joint);
  return out;
}

inline Classification classify(const DgsmModel& model, const grid::PolarGrid& polar, spn::Workspace& ws) {
  return classify(model, grid::polar_to_evidence(polar), ws);
}

/// log sum_y P(y, x): the sum circuit with Y marginalized.
inline double novelty_score(const DgsmModel& model, const spn::Evidence& cells, spn::Workspace& ws) {
  detail::check_cells(model, cells);
  return spn::evaluate(model.graph, attach_class_evidence(cells, model.latent, std::nullopt), ws);
}

inline double novelty_score(const DgsmModel& model, const grid::PolarGrid& polar, spn::Workspace& ws) {
  return novelty_score(model, grid::polar_to_evidence(polar), ws);
}

/// argmax_x P(x | y): MPE over every cell with Y observed.
inline grid::PolarGrid generate_prototype(const DgsmModel& model, const std::string& label, spn::Workspace& ws) {
  const spn::Evidence cells(model.spec.num_cells());
  const auto ev = attach_class_evidence(cells, model.latent, label);
  std::vector<spn::VariableId> query(model.spec.num_cells());
  for (std::size_t v = 0; v < query.size(); ++v) query[v] = static_cast<spn::VariableId>(v);
  const auto mpe = spn::mpe_infer(model.graph, ev, query, ws);
  return grid::apply_assignment(grid::PolarGrid(model.spec), mpe.assignment);
}

/// How Y is handled when completing masked cells.
///  Posterior: Y is the class maximizing P(y, observed cells) (the masked cells
///             summed out); the cells are then the MPE state given that class.
///             With an empty mask this is exactly classify's prediction.
///  Joint:     Y and the cells are maximized jointly in one MPE pass.
///  SumOverY:  one MPE candidate per class, kept by its score under
///             sum_y P(y, x) with the candidate filled in.
enum class CompletionMode { Posterior, Joint, SumOverY };

inline std::string to_string(CompletionMode m) {
  switch (m) {
    case CompletionMode::Posterior: return "posterior";
    case CompletionMode::Joint: return "joint";
    case CompletionMode::SumOverY: return "sum";
  }
  return "?";
}

inline CompletionMode completion_mode_from_string(const std::string& s) {
  if (s == "posterior") return CompletionMode::Posterior;
  if (s == "joint") return CompletionMode::Joint;
  if (s == "sum") return CompletionMode::SumOverY;
  throw Error(ErrorKind::InvalidParams, "unknown completion mode '" + s + "' (posterior, joint, sum)");
}

struct Completion {
  spn::Assignment assignment;  // exactly the masked cells
  std::uint32_t predicted = 0;
  double log_value = spn::kLogZero;  // max-circuit value of the completed evidence with Y
};

/// Fills the marginalized cells listed in `masked`.
inline Completion complete(const DgsmModel& model, const spn::Evidence& cells,
                           std::span<const spn::VariableId> masked, CompletionMode mode, spn::Workspace& ws) {
  detail::check_cells(model, cells);
  for (auto v : masked) {
    if (v >= cells.size() || cells.observed(v)) {
      throw Error(ErrorKind::ShapeMismatch, "masked cell " + std::to_string(v) + " is not a marginalized cell");
    }
  }
  Completion out;
  auto conditional = [&](std::uint32_t c) {
    const auto ev = attach_class_evidence(cells, model.latent, model.latent.labels[c]);
    return spn::mpe_infer(model.graph, ev, masked, ws);
  };

  switch (mode) {
    case CompletionMode::Posterior: {
      out.predicted = classify(model, cells, ws).predicted;
      auto mpe = conditional(out.predicted);
      out.assignment = std::move(mpe.assignment);
      out.log_value = mpe.log_value;
      break;
    }
    case CompletionMode::Joint: {
      std::vector<spn::VariableId> query(masked.begin(), masked.end());
      query.push_back(model.latent.variable);
      auto mpe = spn::mpe_infer(model.graph, attach_class_evidence(cells, model.latent, std::nullopt), query, ws);
      out.predicted = mpe.assignment.at(model.latent.variable);
      mpe.assignment.erase(model.latent.variable);
      out.assignment = std::move(mpe.assignment);
      out.log_value = mpe.log_value;
      break;
    }
    case CompletionMode::SumOverY: {
      double best = spn::kLogZero;
      bool first = true;
      for (std::uint32_t c = 0; c < model.latent.num_classes(); ++c) {
        auto mpe = conditional(c);
        spn::Evidence filled = cells;
        for (const auto& [v, value] : mpe.assignment) filled.observe(v, value);
        const double score = novelty_score(model, filled, ws);
        if (first || score > best) {
          first = false;
          best = score;
          out.predicted = c;
          out.assignment = std::move(mpe.assignment);
          out.log_value = mpe.log_value;
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace dgsm::tasks
