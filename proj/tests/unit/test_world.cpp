#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <string>

#include "dgsm/data/dataset.hpp"
#include "dgsm/data/world.hpp"
#include "dgsm/grid/polar.hpp"

using namespace dgsm;
using namespace dgsm::data;
using dgsm::grid::Occupancy;
using dgsm::grid::PolarGridSpec;

namespace {

namespace fs = std::filesystem;

WorldParams small_world(std::size_t floors = 2, std::size_t per_class = 3) {
  WorldParams p;
  p.floors = floors;
  p.samples_per_class = per_class;
  p.novel_samples = 1;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

ErrorKind error_kind(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

}  // namespace

// Straight corridor of width 2 m along the room x axis with the robot on its
// centre line facing along it. Along a bearing theta (robot frame) the wall
// face is 1 / |sin theta| away.
TEST(World, CorridorWallsAtAnalyticRadii) {
  const double width = 2.0, t = 0.15;
  Room room;
  detail::wall_x(room, -12.0, 12.0, -t, 0.0);
  detail::wall_x(room, -12.0, 12.0, width, width + t);
  const Pose pose{0.0, width / 2, 0.0};
  const auto spec = PolarGridSpec::make_default();
  Rng rng(1);
  const auto seen = observe(rasterize(room, pose, 0.05, spec.radius), 0.0, rng);
  const auto polar = grid::cartesian_to_polar(seen, spec);

  const double step = spec.angle_step();
  for (std::size_t a = 0; a < spec.angular_bins; ++a) {
    // Nearest and farthest wall distance over the sector's bearings.
    double near = 1e9, far = 0.0;
    for (int k = 0; k <= 64; ++k) {
      const double s = std::abs(std::sin((static_cast<double>(a) + k / 64.0) * step));
      const double d = s > 0.0 ? (width / 2) / s : 1e9;
      near = std::min(near, d);
      far = std::max(far, d);
    }
    std::size_t first = spec.radial_bins;
    bool occupied_in_band = false;
    for (std::size_t r = 0; r < spec.radial_bins; ++r) {
      if (spec.radial_edges[r] < near - 0.05) {
        EXPECT_EQ(polar.at(a, r), Occupancy::Empty) << a << "," << r;
      }
      if (first == spec.radial_bins && polar.at(a, r) != Occupancy::Empty) first = r;
      if (polar.at(a, r) != Occupancy::Occupied) continue;
      // Only the wall face can be seen.
      EXPECT_LE(spec.inner_edge(r), far + 0.2) << a << "," << r;
      occupied_in_band = true;
    }
    if (near >= spec.radius) {
      EXPECT_EQ(first, spec.radial_bins) << "sector " << a << " looks along the axis";
      continue;
    }
    if (first == spec.radial_bins) {
      // Seen at a grazing angle, a face cell is hidden by the face cell next
      // to it once it is more than 40 cells along the wall.
      EXPECT_GT(near, 2.0) << "sector " << a;
      continue;
    }
    EXPECT_GE(spec.radial_edges[first], near - 0.1) << "sector " << a;
    EXPECT_LE(spec.inner_edge(first), far + 0.1) << "sector " << a;
    if (near < 2.0) {
      EXPECT_TRUE(occupied_in_band) << "sector " << a;
    }
  }
  // Perpendicular bearings: 90 and 270 degrees open sectors 14 and 42.
  for (std::size_t a : {std::size_t{14}, std::size_t{42}}) {
    std::size_t r = 0;
    while (spec.radial_edges[r] <= 1.0) ++r;
    EXPECT_EQ(polar.at(a, r), Occupancy::Occupied);
    EXPECT_EQ(polar.at(a, r - 1), Occupancy::Empty);
    EXPECT_EQ(polar.at(a, spec.radial_bins - 1), Occupancy::Unknown);
  }
  for (std::size_t a : {std::size_t{0}, std::size_t{27}, std::size_t{28}, std::size_t{55}}) {
    for (std::size_t r = 0; r < spec.radial_bins; ++r) EXPECT_EQ(polar.at(a, r), Occupancy::Empty);
  }
}

TEST(World, ZeroSamplesGivesEmptyDataset) {
  WorldParams p;
  p.samples_per_class = 0;
  p.novel_samples = 0;
  EXPECT_TRUE(generate_world(p, PolarGridSpec::make_default()).empty());
}

TEST(World, SamplesCarryTheirPolarView) {
  const auto spec = PolarGridSpec::make_default();
  const auto samples = generate_world(small_world(1, 2), spec);
  ASSERT_EQ(samples.size(), 4u * 2 + 2u);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(samples[i].id, i);
    EXPECT_EQ(samples[i].polar, grid::cartesian_to_polar(samples[i].cartesian, spec));
    EXPECT_EQ(samples[i].cartesian.at(samples[i].cartesian.origin_x, samples[i].cartesian.origin_y), Occupancy::Empty);
  }
}

TEST(World, DeterministicFilesAndThreadIndependent) {
  const auto spec = PolarGridSpec::make_default();
  auto p = small_world();
  p.threads = 1;
  const auto one = generate_world(p, spec);
  p.threads = 4;
  const auto four = generate_world(p, spec);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].polar, four[i].polar);

  const auto a = scratch("dgsm_world_a"), b = scratch("dgsm_world_b");
  save_dataset(a.string(), one);
  save_dataset(b.string(), generate_world(p, spec));
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(b / fs::relative(entry.path(), a))) << entry.path();
  }
  EXPECT_EQ(files, one.size() + 1);
  p.seed += 1;
  EXPECT_NE(generate_world(p, spec)[0].polar, one[0].polar);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(World, InfeasibleRoom) {
  Room room;
  room.obstacles.push_back({-1.0, -1.0, 2.0, 2.0});
  room.pose_region = {0.0, 0.0, 1.0, 1.0};
  WorldParams p;
  Rng rng(3);
  EXPECT_EQ(error_kind([&] { sample_pose(room, p, rng); }), ErrorKind::InfeasibleGeometry);
  p.robot_radius = 2.0;
  p.elevator_side = {1.1, 1.2};
  p.floors = 1;
  p.samples_per_class = 0;
  p.novel_samples = 1;
  EXPECT_EQ(error_kind([&] { generate_world(p, PolarGridSpec::make_default()); }), ErrorKind::InfeasibleGeometry);
}

TEST(World, UnknownClass) {
  Rng rng(1);
  EXPECT_EQ(error_kind([&] { make_room("kitchenette", WorldParams{}, rng); }), ErrorKind::UnknownLabel);
}

TEST(World, OfficeAreasFollowTheirRanges) {
  const WorldParams p;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const auto small = make_room("small_office", p, rng);
    const double small_area = small.pose_region.x1 * small.pose_region.y1;
    EXPECT_GE(small_area, p.small_office_area.lo - 1e-9);
    EXPECT_LE(small_area, p.small_office_area.hi + 1e-9);
    const auto large = make_room("large_office", p, rng);
    const double large_area = large.pose_region.x1 * large.pose_region.y1;
    EXPECT_GE(large_area, p.large_office_area.lo - 1e-9);
    EXPECT_LE(large_area, p.large_office_area.hi + 1e-9);
  }
}

TEST(World, NoiseFlipsOnlyVisibleCells) {
  auto g = grid::CartesianGrid::centered(10, 0.1, Occupancy::Empty);
  for (std::size_t y = 0; y < g.height; ++y) g.at(15, y) = Occupancy::Occupied;
  Rng a(5), b(5);
  const auto clean = observe(g, 0.0, a);
  const auto flipped = observe(g, 1.0, b);
  for (std::size_t k = 0; k < g.cells.size(); ++k) {
    if (clean.cells[k] == Occupancy::Unknown) {
      EXPECT_EQ(flipped.cells[k], Occupancy::Unknown);
    } else {
      EXPECT_NE(flipped.cells[k], clean.cells[k]);
      EXPECT_NE(flipped.cells[k], Occupancy::Unknown);
    }
  }
}

TEST(Split, LeaveOneFloorOut) {
  const auto samples = generate_world(small_world(4, 2), PolarGridSpec::make_default());
  const auto plan = make_split_plan(samples, 4);
  ASSERT_EQ(plan.folds.size(), 4u);
  std::multiset<std::size_t> tested;
  for (const auto& fold : plan.folds) {
    const std::set<std::size_t> train(fold.train.begin(), fold.train.end());
    for (auto i : fold.test) {
      EXPECT_FALSE(train.count(i));
      EXPECT_EQ(samples[i].floor, fold.test_floor);
      tested.insert(i);
    }
    for (auto i : fold.train) {
      EXPECT_NE(samples[i].floor, fold.test_floor);
      EXPECT_FALSE(is_novel_label(samples[i].label));
    }
    EXPECT_EQ(fold.train.size() + fold.test.size(), samples.size() - 3 * 2);  // other floors' novel samples drop out
  }
  EXPECT_EQ(tested.size(), samples.size());
  EXPECT_EQ(std::set<std::size_t>(tested.begin(), tested.end()).size(), samples.size());
  EXPECT_EQ(count_floors(samples), 4u);
  EXPECT_EQ(error_kind([&] { make_split_plan(samples, 3); }), ErrorKind::InvalidParams);
}

TEST(Dataset, SaveLoadRoundTrip) {
  const auto spec = PolarGridSpec::make_default();
  const auto samples = generate_world(small_world(2, 1), spec);
  const auto dir = scratch("dgsm_dataset_rt");
  save_dataset(dir.string(), samples);
  const auto back = load_dataset(dir.string(), spec);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, samples[i].id);
    EXPECT_EQ(back[i].label, samples[i].label);
    EXPECT_EQ(back[i].floor, samples[i].floor);
    EXPECT_EQ(back[i].polar, samples[i].polar);
  }
  EXPECT_EQ(slurp(dir / "manifest.csv").substr(0, 20), "id,path,label,floor\n");
  fs::remove_all(dir);
}

TEST(Dataset, LoadErrors) {
  const auto spec = PolarGridSpec::make_default();
  const auto dir = scratch("dgsm_dataset_bad");
  EXPECT_EQ(error_kind([&] { load_dataset(dir.string(), spec); }), ErrorKind::IoError);
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.csv") << "id,file,label\n";
  EXPECT_EQ(error_kind([&] { load_dataset(dir.string(), spec); }), ErrorKind::ParseError);
  std::ofstream(dir / "manifest.csv") << "id,path,label,floor\n0,grids/0.grid,corridor\n";
  EXPECT_EQ(error_kind([&] { load_dataset(dir.string(), spec); }), ErrorKind::ParseError);
  std::ofstream(dir / "manifest.csv") << "id,path,label,floor\nx,grids/0.grid,corridor,0\n";
  EXPECT_EQ(error_kind([&] { load_dataset(dir.string(), spec); }), ErrorKind::ParseError);
  std::ofstream(dir / "manifest.csv") << "id,path,label,floor\n0,grids/0.grid,corridor,0\n";
  EXPECT_EQ(error_kind([&] { load_dataset(dir.string(), spec); }), ErrorKind::IoError);
  fs::remove_all(dir);
}
