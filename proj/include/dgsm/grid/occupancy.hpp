#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dgsm/error.hpp"

namespace dgsm::grid {

/// Tri-state cell. The numeric values are the categorical values used as
/// model variables (indicator order empty, occupied, unknown).
enum class Occupancy : std::uint8_t { Empty = 0, Occupied = 1, Unknown = 2 };

inline constexpr std::uint32_t kOccupancyStates = 3;

inline char to_char(Occupancy c) {
  switch (c) {
    case Occupancy::Empty: return 'e';
    case Occupancy::Occupied: return 'o';
    case Occupancy::Unknown: return 'u';
  }
  return '?';
}

inline Occupancy occupancy_from_char(char ch) {
  switch (ch) {
    case 'e': return Occupancy::Empty;
    case 'o': return Occupancy::Occupied;
    case 'u': return Occupancy::Unknown;
    default: throw Error(ErrorKind::ParseError, std::string("bad cell character '") + ch + "'");
  }
}

/// Robocentric Cartesian occupancy grid, row-major (index y * width + x).
/// The robot sits at the centre of cell (origin_x, origin_y); bearing 0 is +x
/// and angles grow towards +y.
struct CartesianGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  double resolution = 0.05;  // metres per cell
  std::size_t origin_x = 0;
  std::size_t origin_y = 0;
  std::vector<Occupancy> cells;

  CartesianGrid() = default;
  CartesianGrid(std::size_t w, std::size_t h, double res, std::size_t ox, std::size_t oy,
                Occupancy fill = Occupancy::Unknown)
      : width(w), height(h), resolution(res), origin_x(ox), origin_y(oy), cells(w * h, fill) {
    if (ox >= w || oy >= h) {
      throw Error(ErrorKind::InvalidParams, "robot origin outside the grid");
    }
  }

  /// Square grid of the given half-extent (in cells) centred on the robot.
  static CartesianGrid centered(std::size_t half_cells, double res, Occupancy fill = Occupancy::Unknown) {
    const std::size_t side = 2 * half_cells + 1;
    return CartesianGrid(side, side, res, half_cells, half_cells, fill);
  }

  Occupancy& at(std::size_t x, std::size_t y) { return cells[y * width + x]; }
  Occupancy at(std::size_t x, std::size_t y) const { return cells[y * width + x]; }

  bool operator==(const CartesianGrid&) const = default;
};

/// Restricts the grid to what is visible from the robot. Rays are cast from
/// the robot's cell centre over a dense angular sweep and walk the grid cell
/// by cell (Amanatides-Woo traversal). Each ray records how far along it the
/// first Occupied cell on its digital line lies, a cell whose centre is within
/// half a cell of the ray along the minor axis. A cell stays as it is when it
/// is no farther along its nearest ray than that ray's first hit, so the
/// blocking cell itself remains Occupied; all other cells become Unknown.
inline CartesianGrid raytrace_visibility(const CartesianGrid& in) {
  if (in.at(in.origin_x, in.origin_y) == Occupancy::Occupied) {
    throw Error(ErrorKind::RobotInWall, "robot origin cell is occupied");
  }
  const double ox = static_cast<double>(in.origin_x) + 0.5;
  const double oy = static_cast<double>(in.origin_y) + 0.5;
  const double reach = std::hypot(std::max(ox, static_cast<double>(in.width) - ox),
                                  std::max(oy, static_cast<double>(in.height) - oy));
  // Neighbouring rays are at most a quarter cell apart at the far corner.
  const auto rays = static_cast<std::size_t>(std::ceil(8.0 * std::numbers::pi * reach)) + 8;
  const auto w = static_cast<long>(in.width);
  const auto h = static_cast<long>(in.height);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> ray_dx(rays), ray_dy(rays), hit(rays, kInf);
  for (std::size_t k = 0; k < rays; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(rays);
    const double dx = ray_dx[k] = std::cos(theta);
    const double dy = ray_dy[k] = std::sin(theta);
    const double band = 0.5 * std::max(std::abs(dx), std::abs(dy));
    long cx = static_cast<long>(in.origin_x);
    long cy = static_cast<long>(in.origin_y);
    const long step_x = dx > 0 ? 1 : -1;
    const long step_y = dy > 0 ? 1 : -1;
    const double delta_x = dx != 0.0 ? std::abs(1.0 / dx) : kInf;
    const double delta_y = dy != 0.0 ? std::abs(1.0 / dy) : kInf;
    double next_x = dx > 0 ? (static_cast<double>(cx) + 1.0 - ox) * delta_x
                           : (dx < 0 ? (ox - static_cast<double>(cx)) * delta_x : kInf);
    double next_y = dy > 0 ? (static_cast<double>(cy) + 1.0 - oy) * delta_y
                           : (dy < 0 ? (oy - static_cast<double>(cy)) * delta_y : kInf);
    while (cx >= 0 && cy >= 0 && cx < w && cy < h) {
      const double px = static_cast<double>(cx) + 0.5 - ox;
      const double py = static_cast<double>(cy) + 0.5 - oy;
      if (in.at(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy)) == Occupancy::Occupied &&
          std::abs(px * dy - py * dx) <= band) {
        hit[k] = px * dx + py * dy;
        break;
      }
      if (next_x < next_y) {
        next_x += delta_x;
        cx += step_x;
      } else {
        next_y += delta_y;
        cy += step_y;
      }
    }
  }

  CartesianGrid out = in;
  for (std::size_t y = 0; y < in.height; ++y) {
    for (std::size_t x = 0; x < in.width; ++x) {
      const double px = static_cast<double>(x) + 0.5 - ox;
      const double py = static_cast<double>(y) + 0.5 - oy;
      double theta = std::atan2(py, px);
      if (theta < 0.0) theta += 2.0 * std::numbers::pi;
      const auto k = static_cast<std::size_t>(std::lround(theta / (2.0 * std::numbers::pi) * static_cast<double>(rays))) % rays;
      if (px * ray_dx[k] + py * ray_dy[k] > hit[k] + 1e-9) out.at(x, y) = Occupancy::Unknown;
    }
  }
  return out;
}

}  // namespace dgsm::grid
