// Command-line front end: dataset generation, model building and training,
// the four inference tasks, and the full cross-validation experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgsm/config.hpp"
#include "dgsm/data/dataset.hpp"
#include "dgsm/data/metrics.hpp"
#include "dgsm/data/world.hpp"
#include "dgsm/grid/io.hpp"
#include "dgsm/model.hpp"
#include "dgsm/spn/hard_em.hpp"
#include "dgsm/tasks/experiment.hpp"
#include "dgsm/tasks/tasks.hpp"

namespace {

using namespace dgsm;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::vector<std::string> overrides;  // key=value
  bool dump_config = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value configuration file");
  app->add_option("--seed", c.seed, "master seed (for gen-data: the dataset seed)");
  app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  app->add_option("--set", c.overrides, "override one setting, key=value (repeatable)");
  app->add_flag("--dump-config", c.dump_config, "print the effective configuration and exit");
}

Config resolve(const Common& c, bool seed_is_data_seed = false) {
  Config cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "--set expects key=value, got '" + kv + "'");
    set_option(cfg, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
  if (c.seed) (seed_is_data_seed ? cfg.world.seed : cfg.seed) = *c.seed;
  if (c.threads) set_option(cfg, "threads", std::to_string(*c.threads));
  return cfg;
}

bool dumped(const Common& c, const Config& cfg) {
  if (c.dump_config) write_config(std::cout, cfg);
  return c.dump_config;
}

void log_line(const std::string& s) { std::cerr << s << std::endl; }

std::vector<data::PlaceSample> samples_from(const std::string& dataset, const std::string& grid_path,
                                            const grid::PolarGridSpec& spec) {
  if (!grid_path.empty()) {
    data::PlaceSample s;
    s.label = "unlabeled";
    s.polar = grid::load_polar(grid_path, &spec);
    return {std::move(s)};
  }
  if (dataset.empty()) throw Error(ErrorKind::InvalidParams, "either --dataset or --grid is required");
  return data::load_dataset(dataset, spec);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DGSM: sum-product networks over polar occupancy grids"};
  app.require_subcommand(1);
  // Required options are checked after parsing so --dump-config works alone.
  Common common;
  std::string model_path, dataset, out, grid_path, label, tasks_filter;
  std::optional<std::size_t> test_floor, mask_start;
  std::size_t mask_span = 14;
  std::string mode = "posterior";

  auto* gen = app.add_subcommand("gen-data", "synthesize a labeled dataset (manifest.csv + grids/)");
  add_common(gen, common);
  gen->add_option("--out", out, "output directory");

  auto* build = app.add_subcommand("build", "build an untrained DGSM");
  add_common(build, common);
  build->add_option("--out", out, "model file (.spn, plus .meta sidecar)");

  auto* train = app.add_subcommand("train", "hard-EM training on a dataset's inlier samples");
  add_common(train, common);
  train->add_option("--model", model_path, "input model");
  train->add_option("--dataset", dataset, "dataset directory");
  train->add_option("--out", out, "trained model file");
  train->add_option("--test-floor", test_floor, "hold out this floor");
  std::string log_path;
  train->add_option("--log", log_path, "training log CSV");

  auto* classify = app.add_subcommand("classify", "per-class log-joint scores and predictions");
  auto* novelty = app.add_subcommand("novelty", "log marginal novelty scores");
  auto* complete = app.add_subcommand("complete", "fill a masked 90-degree view");
  for (auto* sub : {classify, novelty, complete}) {
    add_common(sub, common);
    sub->add_option("--model", model_path, "trained model");
    sub->add_option("--dataset", dataset, "dataset directory");
    sub->add_option("--grid", grid_path, "single polar grid file");
    sub->add_option("--out", out, "output CSV (default: stdout)");
  }
  complete->add_option("--mask-start", mask_start, "first masked angular bin (default: seeded random per sample)");
  complete->add_option("--mask-span", mask_span, "masked angular bins");
  complete->add_option("--mode", mode, "posterior, joint or sum");
  std::string grid_out;
  complete->add_option("--grid-out", grid_out, "write the completed grid (single --grid input)");

  auto* prototype = app.add_subcommand("prototype", "most probable grid for a class");
  add_common(prototype, common);
  prototype->add_option("--model", model_path, "trained model");
  prototype->add_option("--class", label, "class label");
  prototype->add_option("--out", out, "output polar grid file");
  std::string render;
  prototype->add_option("--render", render, "also write a PGM render");

  auto* experiment = app.add_subcommand("experiment", "leave-one-floor-out experiment");
  add_common(experiment, common);
  experiment->add_option("--dataset", dataset, "dataset directory (default: generate from the config)");
  experiment->add_option("--out", out, "output directory");
  experiment->add_option("--tasks", tasks_filter, "comma-separated subset of classify,novelty,prototype,complete");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto require = [](const std::string& v, const char* flag) {
      if (v.empty()) throw Error(ErrorKind::InvalidParams, std::string(flag) + " is required");
    };

    if (*gen) {
      const Config cfg = resolve(common, true);
      if (dumped(common, cfg)) return 0;
      require(out, "--out");
      const auto samples = data::generate_world(cfg.world, cfg.spec);
      data::save_dataset(out, samples);
      log_line("wrote " + std::to_string(samples.size()) + " samples to " + out);
    } else if (*build) {
      const Config cfg = resolve(common);
      if (dumped(common, cfg)) return 0;
      require(out, "--out");
      const auto model = build_dgsm(cfg.spec, cfg.model, cfg.seed);
      save_model(out, model);
      log_line("model: " + std::to_string(model.graph.num_nodes()) + " nodes, " +
               std::to_string(model.graph.num_edges()) + " edges");
    } else if (*train) {
      Config cfg = resolve(common);
      if (dumped(common, cfg)) return 0;
      require(model_path, "--model");
      require(dataset, "--dataset");
      require(out, "--out");
      auto model = load_model(model_path);
      const auto samples = data::load_dataset(dataset, model.spec);
      std::vector<spn::Evidence> ev;
      for (const auto& s : samples) {
        if (data::is_novel_label(s.label) || (test_floor && s.floor == *test_floor)) continue;
        ev.push_back(attach_class_evidence(grid::polar_to_evidence(s.polar), model.latent, s.label));
      }
      cfg.train.threads = cfg.threads;
      const auto result = spn::train(model.graph, ev, cfg.train, [](const spn::IterationLog& l) {
        std::fprintf(stderr, "iteration %zu  mean loglik %.4f\n", l.iteration, l.mean_train_loglik);
      });
      model.graph = result.graph;
      save_model(out, model);
      if (!log_path.empty()) {
        auto lf = open_out(log_path);
        spn::write_training_log_csv(lf, result.log);
      }
      log_line("model hash " + tasks::hash_hex(spn::weight_hash(model.graph)));
    } else if (*classify || *novelty || *complete) {
      const Config cfg = resolve(common);
      if (dumped(common, cfg)) return 0;
      require(model_path, "--model");
      const auto model = load_model(model_path);
      const auto samples = samples_from(dataset, grid_path, model.spec);
      const std::string hash = tasks::hash_hex(spn::weight_hash(model.graph));
      std::ofstream file;
      if (!out.empty()) file = open_out(out);
      std::ostream& os = out.empty() ? std::cout : file;
      spn::Workspace ws;
      if (*classify) {
        os << "id,label,predicted";
        for (const auto& c : model.latent.labels) os << ",log_joint_" << c;
        os << ",model_hash\n";
        for (const auto& s : samples) {
          const auto r = tasks::classify(model, s.polar, ws);
          os << s.id << ',' << s.label << ',' << model.latent.label_of(r.predicted);
          for (double v : r.log_joint) os << ',' << spn::format_double(v);
          os << ',' << hash << '\n';
        }
      } else if (*novelty) {
        os << "id,label,score,model_hash\n";
        for (const auto& s : samples) {
          os << s.id << ',' << s.label << ',' << spn::format_double(tasks::novelty_score(model, s.polar, ws)) << ','
             << hash << '\n';
        }
      } else {
        const auto cmode = tasks::completion_mode_from_string(mode);
        os << "id,label,mask_start,accuracy,predicted,model_hash\n";
        for (const auto& s : samples) {
          const std::size_t start = mask_start ? *mask_start
                                               : Rng(derive_seed(cfg.seed, {0x6d61736bULL, s.id})).below(model.spec.angular_bins);
          const auto m = grid::mask_view(grid::polar_to_evidence(s.polar), model.spec, start, mask_span);
          const auto r = tasks::complete(model, m.evidence, m.masked, cmode, ws);
          os << s.id << ',' << s.label << ',' << start << ','
             << spn::format_double(data::completion_accuracy(s.polar, r.assignment, m.masked)) << ','
             << model.latent.label_of(r.predicted) << ',' << hash << '\n';
          if (!grid_out.empty() && !grid_path.empty()) grid::save_polar(grid_out, grid::apply_assignment(s.polar, r.assignment));
        }
      }
    } else if (*prototype) {
      const Config cfg = resolve(common);
      if (dumped(common, cfg)) return 0;
      require(model_path, "--model");
      require(label, "--class");
      require(out, "--out");
      const auto model = load_model(model_path);
      spn::Workspace ws;
      const auto proto = tasks::generate_prototype(model, label, ws);
      grid::save_polar(out, proto);
      if (!render.empty()) grid::write_pgm(render, grid::render_polar(proto));
    } else if (*experiment) {
      Config cfg = resolve(common);
      if (!tasks_filter.empty()) {
        std::string list = tasks_filter;
        std::replace(list.begin(), list.end(), ',', ' ');
        set_option(cfg, "experiment.tasks", list);
      }
      if (dumped(common, cfg)) return 0;
      require(out, "--out");
      std::vector<data::PlaceSample> samples;
      if (dataset.empty()) {
        log_line("generating dataset");
        samples = data::generate_world(cfg.world, cfg.spec);
      } else {
        samples = data::load_dataset(dataset, cfg.spec);
      }
      {
        std::filesystem::create_directories(out);
        auto cf = open_out((std::filesystem::path(out) / "config.txt").string());
        write_config(cf, cfg);
      }
      const auto report = tasks::run_experiment(cfg, samples, out, log_line);
      std::ifstream summary(std::filesystem::path(out) / "summary.txt");
      std::cout << summary.rdbuf();
      (void)report;
    }
  } catch (const Error& e) {
    std::cerr << "error: kind=" << to_string(e.kind()) << " message=" << e.message() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=Internal message=" << e.what() << std::endl;
    return 1;
  }
  return 0;
}
