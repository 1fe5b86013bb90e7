#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/grid/polar.hpp"
#include "dgsm/spn/inference.hpp"

namespace dgsm::data {

struct ScoredSample {
  double score = 0.0;
  bool inlier = false;  // inliers are the positive class
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // predict inlier when score >= threshold
};

struct RocResult {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
};

/// Threshold sweep from the highest score down; samples sharing a score move
/// together, so ties contribute a diagonal segment. AUC by the trapezoid rule.
inline RocResult roc_auc(std::span<const ScoredSample> scores) {
  std::size_t pos = 0;
  for (const auto& s : scores) pos += s.inlier ? 1 : 0;
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorKind::SingleClass, "ROC needs both inliers and novel samples");

  std::vector<ScoredSample> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });

  RocResult out;
  out.points.push_back({0.0, 0.0, HUGE_VAL});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == t; ++i) (sorted[i].inlier ? tp : fp) += 1;
    const RocPoint p{static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos), t};
    const RocPoint& q = out.points.back();
    out.auc += (p.fpr - q.fpr) * (p.tpr + q.tpr) / 2.0;
    out.points.push_back(p);
  }
  return out;
}

struct ConfusionResult {
  std::vector<std::vector<double>> matrix;  // row = true class, column = predicted
  std::vector<double> per_class;            // diagonal
  double mean_accuracy = 0.0;
};

inline ConfusionResult confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                                 std::span<const std::string> classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::ShapeMismatch, "truth and prediction lists differ in length");
  }
  auto index = [&](const std::string& label) {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error(ErrorKind::UnknownLabel, "label '" + label + "' not in class order");
    return static_cast<std::size_t>(it - classes.begin());
  };
  const std::size_t k = classes.size();
  std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) counts[index(truth[i])][index(predicted[i])] += 1.0;

  ConfusionResult out;
  out.matrix = counts;
  for (std::size_t i = 0; i < k; ++i) {
    double total = 0.0;
    for (double c : counts[i]) total += c;
    if (total == 0.0) throw Error(ErrorKind::EmptyClass, "class '" + classes[i] + "' has no samples");
    for (auto& c : out.matrix[i]) c /= total;
    out.per_class.push_back(out.matrix[i][i]);
    out.mean_accuracy += out.matrix[i][i];
  }
  if (k > 0) out.mean_accuracy /= static_cast<double>(k);
  return out;
}

/// Fraction of masked cells whose inferred state equals the truth.
inline double completion_accuracy(const grid::PolarGrid& truth, const spn::Assignment& assignment,
                                  std::span<const spn::VariableId> masked) {
  if (masked.empty()) return 1.0;
  std::size_t correct = 0;
  for (auto v : masked) {
    const auto it = assignment.find(v);
    if (it == assignment.end()) {
      throw Error(ErrorKind::CoverageMismatch, "assignment misses masked cell " + std::to_string(v));
    }
    if (v >= truth.cells.size()) throw Error(ErrorKind::ShapeMismatch, "masked cell outside the grid");
    correct += static_cast<std::uint32_t>(truth.cells[v]) == it->second ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(masked.size());
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1); zero for fewer than two values.
inline double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace dgsm::data
