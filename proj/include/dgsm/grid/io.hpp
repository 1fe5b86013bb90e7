#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/grid/occupancy.hpp"
#include "dgsm/grid/polar.hpp"
#include "dgsm/spn/serialize.hpp"

namespace dgsm::grid {

// Grid text files:
//   grid cartesian <width> <height> <resolution> [<origin_x> <origin_y>]
//   grid polar <angular_bins> <radial_bins> <radius>
// followed by one row per line using 'u', 'e', 'o'. Cartesian rows are
// y = 0 .. height-1; polar rows are angular bins, columns radial bins. A
// polar file's rings use the default geometric scheme for its radius unless
// the caller supplies a spec.

inline void write_cartesian(std::ostream& out, const CartesianGrid& g) {
  out << "grid cartesian " << g.width << ' ' << g.height << ' ' << spn::format_double(g.resolution) << ' '
      << g.origin_x << ' ' << g.origin_y << '\n';
  std::string row(g.width, 'u');
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) row[x] = to_char(g.at(x, y));
    out << row << '\n';
  }
}

inline void write_polar(std::ostream& out, const PolarGrid& g) {
  out << "grid polar " << g.spec.angular_bins << ' ' << g.spec.radial_bins << ' '
      << spn::format_double(g.spec.radius) << '\n';
  std::string row(g.spec.radial_bins, 'u');
  for (std::size_t a = 0; a < g.spec.angular_bins; ++a) {
    for (std::size_t r = 0; r < g.spec.radial_bins; ++r) row[r] = to_char(g.at(a, r));
    out << row << '\n';
  }
}

namespace detail {

inline std::vector<std::string> read_rows(std::istream& in, std::size_t rows, std::size_t cols) {
  std::vector<std::string> out(rows);
  for (auto& row : out) {
    if (!std::getline(in, row)) throw Error(ErrorKind::ParseError, "grid file ends early");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.size() != cols) {
      throw Error(ErrorKind::ShapeMismatch, "grid row has " + std::to_string(row.size()) +
                                                " cells, expected " + std::to_string(cols));
    }
  }
  return out;
}

}  // namespace detail

inline CartesianGrid read_cartesian(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty grid file");
  std::istringstream hs(line);
  std::string magic, kind;
  std::size_t w = 0, h = 0;
  double res = 0.0;
  if (!(hs >> magic >> kind >> w >> h >> res) || magic != "grid" || kind != "cartesian" || w == 0 ||
      h == 0 || !(res > 0.0)) {
    throw Error(ErrorKind::ParseError, "bad cartesian grid header '" + line + "'");
  }
  std::size_t ox = (w - 1) / 2, oy = (h - 1) / 2;
  if (std::size_t a, b; hs >> a >> b) {
    ox = a;
    oy = b;
  }
  CartesianGrid g(w, h, res, ox, oy);
  const auto rows = detail::read_rows(in, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) g.at(x, y) = occupancy_from_char(rows[y][x]);
  return g;
}

inline PolarGrid read_polar(std::istream& in, const PolarGridSpec* spec = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty grid file");
  std::istringstream hs(line);
  std::string magic, kind;
  std::size_t a = 0, r = 0;
  double radius = 0.0;
  if (!(hs >> magic >> kind >> a >> r >> radius) || magic != "grid" || kind != "polar") {
    throw Error(ErrorKind::ParseError, "bad polar grid header '" + line + "'");
  }
  PolarGridSpec s;
  if (spec) {
    if (spec->angular_bins != a || spec->radial_bins != r) {
      throw Error(ErrorKind::ShapeMismatch, "polar grid file is " + std::to_string(a) + "x" +
                                                std::to_string(r) + ", expected " +
                                                std::to_string(spec->angular_bins) + "x" +
                                                std::to_string(spec->radial_bins));
    }
    s = *spec;
  } else {
    s = PolarGridSpec::make(radius, a, r,
                            std::min(PolarGridSpec::kDefaultInnerDepth, radius / static_cast<double>(r)));
  }
  PolarGrid g(s);
  const auto rows = detail::read_rows(in, a, r);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < r; ++j) g.at(i, j) = occupancy_from_char(rows[i][j]);
  return g;
}

inline void save_polar(const std::string& path, const PolarGrid& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  write_polar(out, g);
}

inline PolarGrid load_polar(const std::string& path, const PolarGridSpec* spec = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  return read_polar(in, spec);
}

inline void save_cartesian(const std::string& path, const CartesianGrid& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  write_cartesian(out, g);
}

inline CartesianGrid load_cartesian(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  return read_cartesian(in);
}

// Graymap rendering: unknown = 128, empty = 255, occupied = 0.

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

inline std::uint8_t gray(Occupancy c) {
  switch (c) {
    case Occupancy::Empty: return 255;
    case Occupancy::Occupied: return 0;
    case Occupancy::Unknown: return 128;
  }
  return 128;
}

/// Top-down image of a Cartesian grid (+y up).
inline Image render_cartesian(const CartesianGrid& g) {
  Image img{g.width, g.height, std::vector<std::uint8_t>(g.width * g.height)};
  for (std::size_t y = 0; y < g.height; ++y)
    for (std::size_t x = 0; x < g.width; ++x)
      img.pixels[(g.height - 1 - y) * g.width + x] = gray(g.at(x, y));
  return img;
}

/// Disc image of a polar grid, robot at the centre, bearing 0 to the right.
inline Image render_polar(const PolarGrid& g, std::size_t half = 100) {
  const std::size_t side = 2 * half + 1;
  Image img{side, side, std::vector<std::uint8_t>(side * side, 128)};
  const double scale = g.spec.radius / static_cast<double>(half);
  for (std::size_t py = 0; py < side; ++py) {
    for (std::size_t px = 0; px < side; ++px) {
      const double dx = (static_cast<double>(px) - static_cast<double>(half)) * scale;
      const double dy = (static_cast<double>(half) - static_cast<double>(py)) * scale;
      std::size_t a, r;
      if (g.spec.locate(std::hypot(dx, dy), std::atan2(dy, dx), a, r)) {
        img.pixels[py * side + px] = gray(g.at(a, r));
      }
    }
  }
  return img;
}

/// Places images side by side, separated by a 4-pixel unknown-gray gutter.
inline Image side_by_side(const Image& left, const Image& right) {
  const std::size_t gap = 4;
  const std::size_t h = std::max(left.height, right.height);
  Image out{left.width + gap + right.width, h, {}};
  out.pixels.assign(out.width * h, 128);
  for (std::size_t y = 0; y < left.height; ++y)
    for (std::size_t x = 0; x < left.width; ++x) out.pixels[y * out.width + x] = left.pixels[y * left.width + x];
  for (std::size_t y = 0; y < right.height; ++y)
    for (std::size_t x = 0; x < right.width; ++x)
      out.pixels[y * out.width + left.width + gap + x] = right.pixels[y * right.width + x];
  return out;
}

/// Binary portable graymap (P5).
inline void write_pgm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace dgsm::grid
