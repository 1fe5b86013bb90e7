#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgsm/data/world.hpp"
#include "dgsm/error.hpp"
#include "dgsm/grid/io.hpp"

namespace dgsm::data {

/// Leave-one-floor-out folds: fold k tests on floor k and trains on the rest.
struct Fold {
  std::size_t test_floor = 0;
  std::vector<std::size_t> train;  // indices into the sample list
  std::vector<std::size_t> test;
};

struct SplitPlan {
  std::vector<Fold> folds;
};

/// Novel classes never enter a training set; they appear only in the test
/// set of the floor they were generated on.
inline SplitPlan make_split_plan(const std::vector<PlaceSample>& samples, std::size_t floors) {
  SplitPlan plan;
  for (std::size_t f = 0; f < floors; ++f) {
    Fold fold{f, {}, {}};
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].floor >= floors) {
        throw Error(ErrorKind::InvalidParams, "sample " + std::to_string(samples[i].id) + " has floor " +
                                                  std::to_string(samples[i].floor) + " outside the plan");
      }
      if (samples[i].floor == f) {
        fold.test.push_back(i);
      } else if (!is_novel_label(samples[i].label)) {
        fold.train.push_back(i);
      }
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

inline std::size_t count_floors(const std::vector<PlaceSample>& samples) {
  std::size_t n = 0;
  for (const auto& s : samples) n = std::max(n, s.floor + 1);
  return n;
}

// On disk a dataset is a directory holding manifest.csv (id,path,label,floor)
// and one polar grid file per sample under grids/. Paths are relative to the
// manifest.

inline void save_dataset(const std::string& dir, const std::vector<PlaceSample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "grids");
  std::ofstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw Error(ErrorKind::IoError, "cannot write manifest in " + dir);
  manifest << "id,path,label,floor\n";
  for (const auto& s : samples) {
    const std::string rel = "grids/" + std::to_string(s.id) + ".grid";
    grid::save_polar((fs::path(dir) / rel).string(), s.polar);
    manifest << s.id << ',' << rel << ',' << s.label << ',' << s.floor << '\n';
  }
}

/// Loads the polar side of a dataset; Cartesian grids are not stored.
inline std::vector<PlaceSample> load_dataset(const std::string& dir, const grid::PolarGridSpec& spec) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(dir) / "manifest.csv";
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,path,label,floor") throw Error(ErrorKind::ParseError, "bad manifest header in " + path.string());
  std::vector<PlaceSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (fields.size() != 4) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    }
    PlaceSample s;
    try {
      s.id = std::stoul(fields[0]);
      s.floor = std::stoul(fields[3]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": bad id or floor");
    }
    s.label = fields[2];
    s.polar = grid::load_polar((fs::path(dir) / fields[1]).string(), &spec);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dgsm::data
