#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/grid/occupancy.hpp"
#include "dgsm/grid/polar.hpp"
#include "dgsm/parallel.hpp"
#include "dgsm/rng.hpp"

namespace dgsm::data {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
};

/// Synthetic office-building generator settings. Each floor gets its own room
/// instances, so leaving a floor out tests generalization to unseen rooms.
struct WorldParams {
  std::uint64_t seed = 7;
  std::size_t floors = 4;
  std::size_t samples_per_class = 100;  // per inlier class and floor
  std::size_t novel_samples = 25;       // per novel class and floor
  double resolution = 0.05;             // metres per Cartesian cell
  double noise_rate = 0.0005;           // per visible cell flip probability
  double clutter_density = 0.12;        // furniture pieces per m^2 of office floor
  double pose_jitter_deg = 12.0;        // heading jitter around a room's travel direction
  double robot_radius = 0.3;
  Range corridor_width{1.5, 2.5};
  Range corridor_length{12.0, 20.0};
  Range door_opening{0.8, 1.2};
  Range wall_thickness{0.1, 0.2};
  Range small_office_area{6.0, 12.0};
  Range large_office_area{14.0, 30.0};
  Range elevator_side{1.1, 1.6};
  Range kitchen_area{9.0, 14.0};
  std::size_t threads = 0;
};

inline const std::vector<std::string>& inlier_classes() {
  static const std::vector<std::string> k{"corridor", "doorway", "small_office", "large_office"};
  return k;
}

inline const std::vector<std::string>& novel_classes() {
  static const std::vector<std::string> k{"elevator", "kitchen"};
  return k;
}

inline bool is_novel_label(const std::string& label) {
  const auto& n = novel_classes();
  return std::find(n.begin(), n.end(), label) != n.end();
}

/// Axis-aligned rectangle in the room frame (metres).
struct Rect {
  double x0, y0, x1, y1;

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  double distance(double x, double y) const {
    const double dx = std::max({x0 - x, 0.0, x - x1});
    const double dy = std::max({y0 - y, 0.0, y - y1});
    return std::hypot(dx, dy);
  }
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // robot heading in the room frame
};

/// Obstacles plus the region robot poses are drawn from.
struct Room {
  std::vector<Rect> obstacles;
  Rect pose_region{0, 0, 0, 0};
  // Heading policy: uniform when free_heading, else one of `headings` plus jitter.
  bool free_heading = true;
  std::vector<double> headings;

  double clearance(double x, double y) const {
    double d = 1e9;
    for (const auto& r : obstacles) d = std::min(d, r.distance(x, y));
    return d;
  }
};

struct PlaceSample {
  std::size_t id = 0;
  std::string label;
  std::size_t floor = 0;
  grid::CartesianGrid cartesian;  // observed local map (after visibility and noise)
  grid::PolarGrid polar;          // cartesian_to_polar(cartesian)
};

namespace detail {

/// Wall along x from x0 to x1 occupying y in [y0, y1], with door gaps given
/// as (centre, width) pairs.
inline void wall_x(Room& room, double x0, double x1, double y0, double y1,
                   std::vector<std::pair<double, double>> gaps = {}) {
  std::sort(gaps.begin(), gaps.end());
  double start = x0;
  for (const auto& [c, w] : gaps) {
    if (c - w / 2 > start) room.obstacles.push_back({start, y0, c - w / 2, y1});
    start = std::max(start, c + w / 2);
  }
  if (x1 > start) room.obstacles.push_back({start, y0, x1, y1});
}

inline void wall_y(Room& room, double y0, double y1, double x0, double x1,
                   std::vector<std::pair<double, double>> gaps = {}) {
  std::sort(gaps.begin(), gaps.end());
  double start = y0;
  for (const auto& [c, w] : gaps) {
    if (c - w / 2 > start) room.obstacles.push_back({x0, start, x1, c - w / 2});
    start = std::max(start, c + w / 2);
  }
  if (y1 > start) room.obstacles.push_back({x0, start, x1, y1});
}

/// Closed rectangular room with interior [0,w]x[0,h], walls of thickness t
/// outside it, and optional door gaps given as (side, centre, width).
inline void enclose(Room& room, double w, double h, double t,
                    const std::vector<std::tuple<int, double, double>>& doors) {
  std::vector<std::pair<double, double>> gaps[4];
  for (const auto& [side, c, width] : doors) gaps[side].emplace_back(c, width);
  wall_x(room, -t, w + t, -t, 0.0, gaps[0]);    // bottom
  wall_x(room, -t, w + t, h, h + t, gaps[1]);   // top
  wall_y(room, 0.0, h, -t, 0.0, gaps[2]);       // left
  wall_y(room, 0.0, h, w, w + t, gaps[3]);      // right
}

/// Furniture: pieces against a random wall (desks, shelves) or free-standing
/// (chairs, tables), inside [0,w]x[0,h].
inline void furnish(Room& room, double w, double h, std::size_t pieces, Rng& rng) {
  for (std::size_t i = 0; i < pieces; ++i) {
    if (rng.bernoulli(0.6)) {
      const double len = rng.uniform(0.8, 1.6);
      const double depth = rng.uniform(0.5, 0.8);
      switch (rng.below(4)) {
        case 0: {
          const double x = rng.uniform(0.0, std::max(0.0, w - len));
          room.obstacles.push_back({x, 0.0, std::min(w, x + len), depth});
          break;
        }
        case 1: {
          const double x = rng.uniform(0.0, std::max(0.0, w - len));
          room.obstacles.push_back({x, h - depth, std::min(w, x + len), h});
          break;
        }
        case 2: {
          const double y = rng.uniform(0.0, std::max(0.0, h - len));
          room.obstacles.push_back({0.0, y, depth, std::min(h, y + len)});
          break;
        }
        default: {
          const double y = rng.uniform(0.0, std::max(0.0, h - len));
          room.obstacles.push_back({w - depth, y, w, std::min(h, y + len)});
          break;
        }
      }
    } else {
      const double s = rng.uniform(0.3, 0.6);
      const double x = rng.uniform(0.0, std::max(0.0, w - s));
      const double y = rng.uniform(0.0, std::max(0.0, h - s));
      room.obstacles.push_back({x, y, x + s, y + s});
    }
  }
}

inline std::pair<double, double> rectangle_sides(double area, Rng& rng) {
  const double aspect = rng.uniform(1.0, 2.0);
  double w = std::sqrt(area * aspect);
  double h = area / w;
  if (rng.bernoulli(0.5)) std::swap(w, h);
  return {w, h};
}

inline std::tuple<int, double, double> random_door(double w, double h, double width, Rng& rng) {
  const int side = static_cast<int>(rng.below(4));
  const double len = side < 2 ? w : h;
  const double c = rng.uniform(width / 2 + 0.1, std::max(width / 2 + 0.1, len - width / 2 - 0.1));
  return {side, c, width};
}

/// Robots in rectilinear buildings mostly travel along the room axes.
inline void axis_headings(Room& room) {
  room.free_heading = false;
  room.headings = {0.0, std::numbers::pi / 2, std::numbers::pi, -std::numbers::pi / 2};
}

inline Room make_corridor(const WorldParams& p, Rng& rng) {
  Room room;
  const double w = p.corridor_width.sample(rng);
  const double len = std::max(p.corridor_length.sample(rng), 12.0);
  const double t = p.wall_thickness.sample(rng);
  // Interior [0, len] x [0, w]; each side opening leads into a room.
  std::vector<std::tuple<int, double, double>> doors;
  const std::size_t openings = rng.below(3);
  for (std::size_t i = 0; i < openings; ++i) {
    const int side = static_cast<int>(rng.below(2));
    const double c = rng.uniform(2.0, len - 2.0);
    const double rw = rng.uniform(3.0, 5.0), rd = rng.uniform(3.0, 5.0);
    doors.emplace_back(side, c, rng.uniform(0.8, 1.0));
    const double y0 = side == 0 ? -t - rd : w + t;
    const double y1 = side == 0 ? -t : w + t + rd;
    wall_x(room, c - rw / 2 - t, c + rw / 2 + t, side == 0 ? y0 - t : y1, side == 0 ? y0 : y1 + t);
    wall_y(room, y0, y1, c - rw / 2 - t, c - rw / 2);
    wall_y(room, y0, y1, c + rw / 2, c + rw / 2 + t);
  }
  enclose(room, len, w, t, doors);
  const std::size_t items = rng.below(3);
  for (std::size_t i = 0; i < items; ++i) {
    const double x = rng.uniform(1.0, len - 1.5);
    const double d = rng.uniform(0.3, 0.45);
    if (rng.bernoulli(0.5)) {
      room.obstacles.push_back({x, 0.0, x + rng.uniform(0.4, 1.0), d});
    } else {
      room.obstacles.push_back({x, w - d, x + rng.uniform(0.4, 1.0), w});
    }
  }
  room.pose_region = {1.0, 0.0, len - 1.0, w};
  room.free_heading = false;
  room.headings = {0.0, std::numbers::pi};
  return room;
}

inline Room make_doorway(const WorldParams& p, Rng& rng) {
  Room room;
  const double o = p.door_opening.sample(rng);
  const double t = p.wall_thickness.sample(rng);
  // The opening joins a room (y > 0) to a corridor running along the wall
  // (y < 0). The separating wall occupies y in [-t/2, t/2], opening at x = 0.
  const double wa = rng.uniform(3.0, 6.0), da = rng.uniform(2.5, 5.0);
  const double slack = wa / 2 - o / 2 - 0.2;
  const double ca = rng.uniform(-slack, slack);
  const double cw = p.corridor_width.sample(rng);
  const double reach = 8.0;
  wall_x(room, -reach, reach, -t / 2, t / 2, {{0.0, o}});
  wall_x(room, -reach, reach, -t / 2 - cw - t, -t / 2 - cw);
  wall_x(room, ca - wa / 2 - t, ca + wa / 2 + t, t / 2 + da, t / 2 + da + t);
  wall_y(room, t / 2, t / 2 + da, ca - wa / 2 - t, ca - wa / 2);
  wall_y(room, t / 2, t / 2 + da, ca + wa / 2, ca + wa / 2 + t);
  Room a;
  furnish(a, wa, da, static_cast<std::size_t>(std::lround(p.clutter_density * wa * da)), rng);
  for (auto r : a.obstacles) {
    // keep the area in front of the opening clear
    r = {r.x0 + ca - wa / 2, r.y0 + t / 2, r.x1 + ca - wa / 2, r.y1 + t / 2};
    if (r.distance(0.0, t / 2) > 1.0) room.obstacles.push_back(r);
  }
  const double half = std::max(0.0, o / 2 - p.robot_radius - 0.02);
  room.pose_region = {-half, -0.15, half, 0.15};
  room.free_heading = false;
  room.headings = {std::numbers::pi / 2, -std::numbers::pi / 2};
  return room;
}

inline Room make_office(const WorldParams& p, const Range& area_range, double clutter, Rng& rng) {
  Room room;
  const auto [w, h] = rectangle_sides(area_range.sample(rng), rng);
  const double t = p.wall_thickness.sample(rng);
  enclose(room, w, h, t, {random_door(w, h, rng.uniform(0.8, 1.0), rng)});
  furnish(room, w, h, static_cast<std::size_t>(std::lround(clutter * w * h)), rng);
  room.pose_region = {0.0, 0.0, w, h};
  axis_headings(room);
  return room;
}

inline Room make_elevator(const WorldParams& p, Rng& rng) {
  Room room;
  const double s = p.elevator_side.sample(rng);
  const double t = p.wall_thickness.sample(rng);
  enclose(room, s, s, t, {});
  room.pose_region = {s / 2 - 0.1, s / 2 - 0.1, s / 2 + 0.1, s / 2 + 0.1};
  return room;
}

inline Room make_kitchen(const WorldParams& p, Rng& rng) {
  Room room;
  const auto [w, h] = rectangle_sides(p.kitchen_area.sample(rng), rng);
  const double t = p.wall_thickness.sample(rng);
  enclose(room, w, h, t, {random_door(w, h, 0.9, rng)});
  // Counters along two adjacent walls, a central table, scattered chairs.
  const double depth = 0.6;
  room.obstacles.push_back({0.0, 0.0, w, depth});
  room.obstacles.push_back({0.0, depth, depth, h});
  const double tw = rng.uniform(0.8, 1.2), th = rng.uniform(0.7, 1.0);
  const double tx = rng.uniform(depth + 0.8, std::max(depth + 0.8, w - tw - 0.8));
  const double ty = rng.uniform(depth + 0.8, std::max(depth + 0.8, h - th - 0.8));
  room.obstacles.push_back({tx, ty, tx + tw, ty + th});
  const std::size_t chairs = 2 + rng.below(4);
  for (std::size_t i = 0; i < chairs; ++i) {
    const double s = rng.uniform(0.3, 0.45);
    const double x = rng.uniform(depth, w - s), y = rng.uniform(depth, h - s);
    room.obstacles.push_back({x, y, x + s, y + s});
  }
  room.pose_region = {depth, depth, w, h};
  return room;
}

}  // namespace detail

/// Room instance for a class label.
inline Room make_room(const std::string& label, const WorldParams& p, Rng& rng) {
  if (label == "corridor") return detail::make_corridor(p, rng);
  if (label == "doorway") return detail::make_doorway(p, rng);
  if (label == "small_office") return detail::make_office(p, p.small_office_area, p.clutter_density, rng);
  if (label == "large_office") return detail::make_office(p, p.large_office_area, p.clutter_density, rng);
  if (label == "elevator") return detail::make_elevator(p, rng);
  if (label == "kitchen") return detail::make_kitchen(p, rng);
  throw Error(ErrorKind::UnknownLabel, "no generator for class '" + label + "'");
}

/// Draws a pose inside the room's pose region with at least robot_radius
/// clearance from every obstacle.
inline Pose sample_pose(const Room& room, const WorldParams& p, Rng& rng) {
  const double jitter = p.pose_jitter_deg * std::numbers::pi / 180.0;
  for (int attempt = 0; attempt < 500; ++attempt) {
    const double x = rng.uniform(room.pose_region.x0, room.pose_region.x1);
    const double y = rng.uniform(room.pose_region.y0, room.pose_region.y1);
    double yaw;
    if (room.free_heading || room.headings.empty()) {
      yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
    } else {
      yaw = room.headings[rng.below(room.headings.size())] + rng.uniform(-jitter, jitter);
    }
    if (room.clearance(x, y) >= p.robot_radius) return {x, y, yaw};
  }
  throw Error(ErrorKind::InfeasibleGeometry, "room cannot contain the robot disc");
}

/// Robocentric Cartesian grid covering `radius` around the pose: cells whose
/// centre lies in an obstacle are Occupied, all others Empty.
inline grid::CartesianGrid rasterize(const Room& room, const Pose& pose, double resolution, double radius) {
  const auto half = static_cast<std::size_t>(std::ceil(radius / resolution));
  auto g = grid::CartesianGrid::centered(half, resolution, grid::Occupancy::Empty);
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double extent = (static_cast<double>(half) + 1.0) * resolution * std::numbers::sqrt2;
  std::vector<Rect> near;
  for (const auto& r : room.obstacles)
    if (r.distance(pose.x, pose.y) <= extent) near.push_back(r);
  for (std::size_t y = 0; y < g.height; ++y) {
    const double ly = (static_cast<double>(y) - static_cast<double>(half)) * resolution;
    for (std::size_t x = 0; x < g.width; ++x) {
      const double lx = (static_cast<double>(x) - static_cast<double>(half)) * resolution;
      const double wx = pose.x + c * lx - s * ly;
      const double wy = pose.y + s * lx + c * ly;
      for (const auto& r : near) {
        if (r.contains(wx, wy)) {
          g.at(x, y) = grid::Occupancy::Occupied;
          break;
        }
      }
    }
  }
  return g;
}

/// Visibility, then independent Empty/Occupied flips of visible cells.
inline grid::CartesianGrid observe(const grid::CartesianGrid& world, double noise_rate, Rng& rng) {
  auto seen = grid::raytrace_visibility(world);
  if (noise_rate > 0.0) {
    for (auto& cell : seen.cells) {
      if (cell == grid::Occupancy::Unknown) continue;
      if (rng.bernoulli(noise_rate)) {
        cell = cell == grid::Occupancy::Empty ? grid::Occupancy::Occupied : grid::Occupancy::Empty;
      }
    }
  }
  return seen;
}

inline std::size_t instances_per_floor(const std::string& label) {
  if (label == "doorway") return 3;
  if (label == "small_office" || label == "large_office") return 2;
  return 1;
}

/// Synthesizes every sample: for each floor and class, room instances unique
/// to that floor, then poses inside them. Sample ids are assigned in
/// (floor, class, index) order; every sample draws from its own RNG stream,
/// so the output does not depend on the thread count.
inline std::vector<PlaceSample> generate_world(const WorldParams& p, const grid::PolarGridSpec& spec) {
  struct Job {
    std::string label;
    std::size_t class_index, floor, instance;
  };
  std::vector<std::string> labels = inlier_classes();
  labels.insert(labels.end(), novel_classes().begin(), novel_classes().end());

  std::vector<Job> jobs;
  for (std::size_t f = 0; f < p.floors; ++f) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      const std::size_t count = is_novel_label(labels[c]) ? p.novel_samples : p.samples_per_class;
      const std::size_t inst = instances_per_floor(labels[c]);
      for (std::size_t k = 0; k < count; ++k) jobs.push_back({labels[c], c, f, k % inst});
    }
  }

  // Room instances first (a handful), then the samples.
  std::vector<std::vector<std::vector<Room>>> rooms(p.floors, std::vector<std::vector<Room>>(labels.size()));
  for (std::size_t f = 0; f < p.floors; ++f) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      for (std::size_t i = 0; i < instances_per_floor(labels[c]); ++i) {
        Rng rng(derive_seed(p.seed, {2, c, f, i}));
        rooms[f][c].push_back(make_room(labels[c], p, rng));
      }
    }
  }

  std::vector<PlaceSample> out(jobs.size());
  parallel_for(jobs.size(), p.threads, [&](std::size_t id, std::size_t) {
    const Job& job = jobs[id];
    Rng rng(derive_seed(p.seed, {1, id}));
    const Room& room = rooms[job.floor][job.class_index][job.instance];
    const Pose pose = sample_pose(room, p, rng);
    auto world = rasterize(room, pose, p.resolution, spec.radius);
    PlaceSample s;
    s.id = id;
    s.label = job.label;
    s.floor = job.floor;
    s.cartesian = observe(world, p.noise_rate, rng);
    s.polar = grid::cartesian_to_polar(s.cartesian, spec);
    out[id] = std::move(s);
  });
  return out;
}

}  // namespace dgsm::data
