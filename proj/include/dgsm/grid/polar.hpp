#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/grid/occupancy.hpp"
#include "dgsm/spn/inference.hpp"

namespace dgsm::grid {

/// Ring boundaries r_1 < ... < r_n = radius with geometric growth
///   r_k = radius * (g^k - 1) / (g^n - 1),
/// where g >= 1 is chosen so the innermost ring is `inner_depth` deep.
inline std::vector<double> geometric_edges(double radius, std::size_t rings, double inner_depth) {
  if (rings == 0 || !(radius > 0.0) || !(inner_depth > 0.0) ||
      inner_depth * static_cast<double>(rings) > radius + 1e-12) {
    throw Error(ErrorKind::InvalidParams, "geometric ring edges need 0 < rings * inner_depth <= radius");
  }
  const double n = static_cast<double>(rings);
  const double target = inner_depth / radius;
  // f(g) = (g - 1) / (g^n - 1) decreases from 1/n at g = 1.
  auto f = [n](double g) { return g == 1.0 ? 1.0 / n : (g - 1.0) / (std::pow(g, n) - 1.0); };
  double g = 1.0;
  if (target < 1.0 / n) {
    double lo = 1.0, hi = 2.0;
    while (f(hi) > target) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > target ? lo : hi) = mid;
    }
    g = 0.5 * (lo + hi);
  }
  std::vector<double> edges(rings);
  for (std::size_t k = 1; k <= rings; ++k) {
    const double kd = static_cast<double>(k);
    edges[k - 1] = g == 1.0 ? radius * kd / n : radius * (std::pow(g, kd) - 1.0) / (std::pow(g, n) - 1.0);
  }
  edges.back() = radius;
  return edges;
}

struct PolarGridSpec {
  double radius = 5.0;
  std::size_t angular_bins = 56;
  std::size_t radial_bins = 21;
  std::vector<double> radial_edges;  // outer boundary of each ring

  static constexpr double kDefaultInnerDepth = 0.1;

  static PolarGridSpec make_default() { return make(5.0, 56, 21, kDefaultInnerDepth); }

  static PolarGridSpec make(double radius, std::size_t angular, std::size_t radial, double inner_depth) {
    PolarGridSpec s;
    s.radius = radius;
    s.angular_bins = angular;
    s.radial_bins = radial;
    s.radial_edges = geometric_edges(radius, radial, inner_depth);
    return s;
  }

  std::size_t num_cells() const { return angular_bins * radial_bins; }
  double angle_step() const { return 2.0 * std::numbers::pi / static_cast<double>(angular_bins); }

  /// Variable id of a cell: angular_bin * radial_bins + radial_bin.
  std::size_t index(std::size_t angular, std::size_t radial) const { return angular * radial_bins + radial; }

  double inner_edge(std::size_t ring) const { return ring == 0 ? 0.0 : radial_edges[ring - 1]; }

  void check() const {
    if (angular_bins == 0 || radial_bins == 0) throw Error(ErrorKind::InvalidParams, "empty polar grid");
    if (radial_edges.size() != radial_bins) {
      throw Error(ErrorKind::InvalidParams, "radial edge count does not match radial bins");
    }
    double prev = 0.0;
    for (double e : radial_edges) {
      if (!(e > prev)) throw Error(ErrorKind::InvalidParams, "radial edges must be strictly increasing");
      prev = e;
    }
    if (std::abs(radial_edges.back() - radius) > 1e-9) {
      throw Error(ErrorKind::InvalidParams, "last radial edge must equal the radius");
    }
  }

  /// Bin of a point at (range, bearing); bearing in radians, any range of
  /// values. Returns false outside the disc.
  bool locate(double range, double bearing, std::size_t& angular, std::size_t& radial) const {
    if (!(range < radius) || range < 0.0) return false;
    double a = std::fmod(bearing, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    angular = std::min(static_cast<std::size_t>(a / angle_step()), angular_bins - 1);
    radial = static_cast<std::size_t>(std::upper_bound(radial_edges.begin(), radial_edges.end(), range) -
                                      radial_edges.begin());
    radial = std::min(radial, radial_bins - 1);
    return true;
  }

  bool operator==(const PolarGridSpec&) const = default;
};

/// Tri-state polar grid; cells[index(angular, radial)].
struct PolarGrid {
  PolarGridSpec spec;
  std::vector<Occupancy> cells;

  PolarGrid() = default;
  explicit PolarGrid(PolarGridSpec s, Occupancy fill = Occupancy::Unknown)
      : spec(std::move(s)), cells(spec.num_cells(), fill) {}

  Occupancy& at(std::size_t angular, std::size_t radial) { return cells[spec.index(angular, radial)]; }
  Occupancy at(std::size_t angular, std::size_t radial) const { return cells[spec.index(angular, radial)]; }

  std::size_t count(Occupancy c) const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), c));
  }

  bool operator==(const PolarGrid&) const = default;
};

/// Bins every Cartesian cell centre inside the disc into its polar cell.
/// A polar cell is Occupied if any source is Occupied, else Empty if any
/// source is Empty, else Unknown. A polar cell that receives no source takes
/// the value of the Cartesian cell under its centre.
inline PolarGrid cartesian_to_polar(const CartesianGrid& grid, const PolarGridSpec& spec) {
  spec.check();
  const double res = grid.resolution;
  const double left = (static_cast<double>(grid.origin_x) + 0.5) * res;
  const double right = (static_cast<double>(grid.width - grid.origin_x) - 0.5) * res;
  const double below = (static_cast<double>(grid.origin_y) + 0.5) * res;
  const double above = (static_cast<double>(grid.height - grid.origin_y) - 0.5) * res;
  if (std::min({left, right, below, above}) + 1e-9 < spec.radius) {
    throw Error(ErrorKind::InsufficientCoverage, "the " + std::to_string(spec.radius) +
                                                     " m disc exceeds the Cartesian grid bounds");
  }
  auto rank = [](Occupancy c) {
    return c == Occupancy::Occupied ? 2 : (c == Occupancy::Empty ? 1 : 0);
  };
  PolarGrid out(spec, Occupancy::Unknown);
  std::vector<bool> covered(spec.num_cells(), false);
  for (std::size_t y = 0; y < grid.height; ++y) {
    const double dy = (static_cast<double>(y) - static_cast<double>(grid.origin_y)) * res;
    for (std::size_t x = 0; x < grid.width; ++x) {
      const double dx = (static_cast<double>(x) - static_cast<double>(grid.origin_x)) * res;
      std::size_t a, r;
      if (!spec.locate(std::hypot(dx, dy), std::atan2(dy, dx), a, r)) continue;
      covered[spec.index(a, r)] = true;
      Occupancy& cell = out.at(a, r);
      const Occupancy src = grid.at(x, y);
      if (rank(src) > rank(cell)) cell = src;
    }
  }
  // Small inner cells may hold no Cartesian cell centre; they take the value
  // of the Cartesian cell under their own centre.
  for (std::size_t a = 0; a < spec.angular_bins; ++a) {
    for (std::size_t r = 0; r < spec.radial_bins; ++r) {
      if (covered[spec.index(a, r)]) continue;
      const double inner = r == 0 ? 0.0 : spec.radial_edges[r - 1];
      const double rho = 0.5 * (inner + spec.radial_edges[r]);
      const double theta = (static_cast<double>(a) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(spec.angular_bins);
      const auto x = static_cast<long>(grid.origin_x) + std::lround(rho * std::cos(theta) / res);
      const auto y = static_cast<long>(grid.origin_y) + std::lround(rho * std::sin(theta) / res);
      out.at(a, r) = grid.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
  }
  return out;
}

/// Every cell becomes an observed ternary variable (Unknown is a category,
/// not missing evidence).
inline spn::Evidence polar_to_evidence(const PolarGrid& polar) {
  if (polar.cells.size() != polar.spec.num_cells()) {
    throw Error(ErrorKind::ShapeMismatch, "polar grid cell count does not match its spec");
  }
  spn::Evidence ev(polar.cells.size());
  for (std::size_t i = 0; i < polar.cells.size(); ++i) {
    ev.observe(static_cast<spn::VariableId>(i), static_cast<std::uint32_t>(polar.cells[i]));
  }
  return ev;
}

/// Inverse of polar_to_evidence over the first num_cells variables; every
/// cell must be observed.
inline PolarGrid evidence_to_polar(const spn::Evidence& ev, const PolarGridSpec& spec) {
  if (ev.size() < spec.num_cells()) {
    throw Error(ErrorKind::ShapeMismatch, "evidence smaller than the polar grid");
  }
  PolarGrid out(spec);
  for (std::size_t i = 0; i < spec.num_cells(); ++i) {
    const auto v = static_cast<spn::VariableId>(i);
    if (!ev.observed(v) || ev.value(v) >= kOccupancyStates) {
      throw Error(ErrorKind::ShapeMismatch, "cell " + std::to_string(i) + " is not an observed occupancy");
    }
    out.cells[i] = static_cast<Occupancy>(ev.value(v));
  }
  return out;
}

/// Copies the grid and overwrites cells named in the assignment.
inline PolarGrid apply_assignment(PolarGrid polar, const spn::Assignment& assignment) {
  for (const auto& [var, value] : assignment) {
    if (var < polar.cells.size()) polar.cells[var] = static_cast<Occupancy>(value);
  }
  return polar;
}

struct MaskedEvidence {
  spn::Evidence evidence;
  std::vector<spn::VariableId> masked;  // ascending variable ids
};

/// Marginalizes all radial cells of `span` consecutive angular bins starting
/// at `start`, wrapping past the last bin.
inline MaskedEvidence mask_view(spn::Evidence evidence, const PolarGridSpec& spec, std::size_t start,
                                std::size_t span) {
  if (span > spec.angular_bins) {
    throw Error(ErrorKind::InvalidParams, "mask span exceeds the angular bin count");
  }
  if (evidence.size() < spec.num_cells()) {
    throw Error(ErrorKind::ShapeMismatch, "evidence smaller than the polar grid");
  }
  MaskedEvidence out{std::move(evidence), {}};
  for (std::size_t k = 0; k < span; ++k) {
    const std::size_t a = (start + k) % spec.angular_bins;
    for (std::size_t r = 0; r < spec.radial_bins; ++r) {
      const auto v = static_cast<spn::VariableId>(spec.index(a, r));
      out.evidence.marginalize(v);
      out.masked.push_back(v);
    }
  }
  std::sort(out.masked.begin(), out.masked.end());
  return out;
}

}  // namespace dgsm::grid
