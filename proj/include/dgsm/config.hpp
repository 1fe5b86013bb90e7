#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dgsm/data/world.hpp"
#include "dgsm/error.hpp"
#include "dgsm/grid/polar.hpp"
#include "dgsm/model.hpp"
#include "dgsm/spn/hard_em.hpp"
#include "dgsm/spn/serialize.hpp"
#include "dgsm/tasks/tasks.hpp"

namespace dgsm {

inline const std::vector<std::string>& all_tasks() {
  static const std::vector<std::string> k{"classify", "novelty", "prototype", "complete"};
  return k;
}

struct ExperimentSettings {
  std::vector<std::string> tasks = all_tasks();
  std::size_t mask_span = 14;  // angular bins hidden for completion (90 degrees of 56)
  tasks::CompletionMode completion_mode = tasks::CompletionMode::Posterior;
  bool save_models = false;
  bool render = true;
};

/// Every tunable of a run. Text form: one `key = value` per line, `#` starts
/// a comment, ranges are two numbers, lists are space separated.
struct Config {
  std::uint64_t seed = 42;  // model construction, masks
  std::size_t threads = 0;  // 0 = hardware concurrency
  data::WorldParams world;
  double inner_depth = grid::PolarGridSpec::kDefaultInnerDepth;
  grid::PolarGridSpec spec = grid::PolarGridSpec::make_default();
  DgsmParams model;
  spn::TrainConfig train;
  ExperimentSettings experiment;

  Config() { train.iterations = 300; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof()) {
    throw Error(ErrorKind::ParseError, "config key '" + key + "' expects a number, got '" + text + "'");
  }
  if constexpr (std::is_unsigned_v<T>) {
    if (text.find('-') != std::string::npos) {
      throw Error(ErrorKind::ParseError, "config key '" + key + "' must be non-negative");
    }
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorKind::ParseError, "config key '" + key + "' expects true or false, got '" + text + "'");
}

inline data::Range parse_range(const std::string& key, const std::string& text) {
  const auto w = words(text);
  if (w.size() != 2) throw Error(ErrorKind::ParseError, "config key '" + key + "' expects 'lo hi'");
  data::Range r{parse_number<double>(key, w[0]), parse_number<double>(key, w[1])};
  if (!(r.lo > 0.0) || r.hi < r.lo) {
    throw Error(ErrorKind::InvalidParams, "config key '" + key + "' needs 0 < lo <= hi");
  }
  return r;
}

inline std::string range_text(const data::Range& r) {
  return spn::format_double(r.lo) + " " + spn::format_double(r.hi);
}

inline std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : " ") + x;
  return out;
}

}  // namespace detail

/// Applies one setting. Grid keys rebuild the ring edges unless
/// grid.radial_edges is given explicitly afterwards.
inline void set_option(Config& c, const std::string& key, const std::string& raw) {
  using detail::parse_number;
  const std::string value = detail::trim(raw);
  auto rebuild_spec = [&c] {
    c.spec = grid::PolarGridSpec::make(c.spec.radius, c.spec.angular_bins, c.spec.radial_bins, c.inner_depth);
  };

  if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") c.threads = c.world.threads = c.train.threads = parse_number<std::size_t>(key, value);
  else if (key == "data.seed") c.world.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "data.floors") c.world.floors = parse_number<std::size_t>(key, value);
  else if (key == "data.samples_per_class") c.world.samples_per_class = parse_number<std::size_t>(key, value);
  else if (key == "data.novel_samples") c.world.novel_samples = parse_number<std::size_t>(key, value);
  else if (key == "data.resolution") c.world.resolution = parse_number<double>(key, value);
  else if (key == "data.noise_rate") c.world.noise_rate = parse_number<double>(key, value);
  else if (key == "data.clutter_density") c.world.clutter_density = parse_number<double>(key, value);
  else if (key == "data.pose_jitter_deg") c.world.pose_jitter_deg = parse_number<double>(key, value);
  else if (key == "data.robot_radius") c.world.robot_radius = parse_number<double>(key, value);
  else if (key == "data.corridor_width") c.world.corridor_width = detail::parse_range(key, value);
  else if (key == "data.corridor_length") c.world.corridor_length = detail::parse_range(key, value);
  else if (key == "data.door_opening") c.world.door_opening = detail::parse_range(key, value);
  else if (key == "data.wall_thickness") c.world.wall_thickness = detail::parse_range(key, value);
  else if (key == "data.small_office_area") c.world.small_office_area = detail::parse_range(key, value);
  else if (key == "data.large_office_area") c.world.large_office_area = detail::parse_range(key, value);
  else if (key == "data.elevator_side") c.world.elevator_side = detail::parse_range(key, value);
  else if (key == "data.kitchen_area") c.world.kitchen_area = detail::parse_range(key, value);
  else if (key == "grid.radius") { c.spec.radius = parse_number<double>(key, value); rebuild_spec(); }
  else if (key == "grid.angular_bins") { c.spec.angular_bins = parse_number<std::size_t>(key, value); rebuild_spec(); }
  else if (key == "grid.radial_bins") { c.spec.radial_bins = parse_number<std::size_t>(key, value); rebuild_spec(); }
  else if (key == "grid.inner_depth") { c.inner_depth = parse_number<double>(key, value); rebuild_spec(); }
  else if (key == "grid.radial_edges") {
    c.spec.radial_edges.clear();
    for (const auto& w : detail::words(value)) c.spec.radial_edges.push_back(parse_number<double>(key, w));
    c.spec.check();
  }
  else if (key == "model.views") c.model.num_views = parse_number<std::size_t>(key, value);
  else if (key == "model.view_decompositions") c.model.view_params.num_decompositions = parse_number<std::size_t>(key, value);
  else if (key == "model.view_subsets") c.model.view_params.num_subsets = parse_number<std::size_t>(key, value);
  else if (key == "model.view_mixtures") c.model.view_params.num_mixtures = parse_number<std::size_t>(key, value);
  else if (key == "model.view_top_sums") c.model.view_top_sums = parse_number<std::size_t>(key, value);
  else if (key == "model.class_decompositions") c.model.class_params.num_decompositions = parse_number<std::size_t>(key, value);
  else if (key == "model.class_subsets") c.model.class_params.num_subsets = parse_number<std::size_t>(key, value);
  else if (key == "model.class_mixtures") c.model.class_params.num_mixtures = parse_number<std::size_t>(key, value);
  else if (key == "model.classes") {
    c.model.classes = detail::words(value);
    if (c.model.classes.empty()) throw Error(ErrorKind::InvalidParams, "model.classes must not be empty");
  }
  else if (key == "model.init") {
    if (value == "uniform") c.model.init = spn::WeightInit::Uniform;
    else if (value == "random") c.model.init = spn::WeightInit::Random;
    else throw Error(ErrorKind::ParseError, "model.init expects uniform or random");
  }
  else if (key == "train.iterations") c.train.iterations = parse_number<std::size_t>(key, value);
  else if (key == "train.smoothing") c.train.smoothing = parse_number<double>(key, value);
  else if (key == "train.seed") c.train.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "train.shuffle") c.train.shuffle = detail::parse_bool(key, value);
  else if (key == "experiment.tasks") {
    auto ts = detail::words(value);
    for (const auto& t : ts) {
      if (std::find(all_tasks().begin(), all_tasks().end(), t) == all_tasks().end()) {
        throw Error(ErrorKind::InvalidParams, "unknown task '" + t + "'");
      }
    }
    c.experiment.tasks = ts;
  }
  else if (key == "experiment.mask_span") c.experiment.mask_span = parse_number<std::size_t>(key, value);
  else if (key == "experiment.completion_mode") c.experiment.completion_mode = tasks::completion_mode_from_string(value);
  else if (key == "experiment.save_models") c.experiment.save_models = detail::parse_bool(key, value);
  else if (key == "experiment.render") c.experiment.render = detail::parse_bool(key, value);
  else throw Error(ErrorKind::ParseError, "unknown config key '" + key + "'");
}

/// Parses `key = value` lines on top of `base`.
inline Config parse_config(std::istream& in, Config base = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_option(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.kind(), "config line " + std::to_string(lineno) + ": " + e.message());
    }
  }
  return base;
}

inline Config load_config(const std::string& path, Config base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read config " + path);
  return parse_config(in, std::move(base));
}

/// Writes every setting, including the resolved ring edges; parsing the
/// output reproduces the configuration.
inline void write_config(std::ostream& out, const Config& c) {
  using spn::format_double;
  const auto& w = c.world;
  out << "seed = " << c.seed << "\n"
      << "threads = " << c.threads << "\n\n"
      << "data.seed = " << w.seed << "\n"
      << "data.floors = " << w.floors << "\n"
      << "data.samples_per_class = " << w.samples_per_class << "\n"
      << "data.novel_samples = " << w.novel_samples << "\n"
      << "data.resolution = " << format_double(w.resolution) << "\n"
      << "data.noise_rate = " << format_double(w.noise_rate) << "\n"
      << "data.clutter_density = " << format_double(w.clutter_density) << "\n"
      << "data.pose_jitter_deg = " << format_double(w.pose_jitter_deg) << "\n"
      << "data.robot_radius = " << format_double(w.robot_radius) << "\n"
      << "data.corridor_width = " << detail::range_text(w.corridor_width) << "\n"
      << "data.corridor_length = " << detail::range_text(w.corridor_length) << "\n"
      << "data.door_opening = " << detail::range_text(w.door_opening) << "\n"
      << "data.wall_thickness = " << detail::range_text(w.wall_thickness) << "\n"
      << "data.small_office_area = " << detail::range_text(w.small_office_area) << "\n"
      << "data.large_office_area = " << detail::range_text(w.large_office_area) << "\n"
      << "data.elevator_side = " << detail::range_text(w.elevator_side) << "\n"
      << "data.kitchen_area = " << detail::range_text(w.kitchen_area) << "\n\n"
      << "grid.radius = " << format_double(c.spec.radius) << "\n"
      << "grid.angular_bins = " << c.spec.angular_bins << "\n"
      << "grid.radial_bins = " << c.spec.radial_bins << "\n"
      << "grid.inner_depth = " << format_double(c.inner_depth) << "\n"
      << "grid.radial_edges =";
  for (double e : c.spec.radial_edges) out << ' ' << format_double(e);
  const auto& m = c.model;
  out << "\n\n"
      << "model.views = " << m.num_views << "\n"
      << "model.view_decompositions = " << m.view_params.num_decompositions << "\n"
      << "model.view_subsets = " << m.view_params.num_subsets << "\n"
      << "model.view_mixtures = " << m.view_params.num_mixtures << "\n"
      << "model.view_top_sums = " << m.view_top_sums << "\n"
      << "model.class_decompositions = " << m.class_params.num_decompositions << "\n"
      << "model.class_subsets = " << m.class_params.num_subsets << "\n"
      << "model.class_mixtures = " << m.class_params.num_mixtures << "\n"
      << "model.classes = " << detail::join(m.classes) << "\n"
      << "model.init = " << (m.init == spn::WeightInit::Uniform ? "uniform" : "random") << "\n\n"
      << "train.iterations = " << c.train.iterations << "\n"
      << "train.smoothing = " << format_double(c.train.smoothing) << "\n"
      << "train.seed = " << c.train.seed << "\n"
      << "train.shuffle = " << (c.train.shuffle ? "true" : "false") << "\n\n"
      << "experiment.tasks = " << detail::join(c.experiment.tasks) << "\n"
      << "experiment.mask_span = " << c.experiment.mask_span << "\n"
      << "experiment.completion_mode = " << tasks::to_string(c.experiment.completion_mode) << "\n"
      << "experiment.save_models = " << (c.experiment.save_models ? "true" : "false") << "\n"
      << "experiment.render = " << (c.experiment.render ? "true" : "false") << "\n";
}

}  // namespace dgsm
