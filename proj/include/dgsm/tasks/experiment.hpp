#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgsm/config.hpp"
#include "dgsm/data/dataset.hpp"
#include "dgsm/data/metrics.hpp"
#include "dgsm/grid/io.hpp"
#include "dgsm/model.hpp"
#include "dgsm/parallel.hpp"
#include "dgsm/spn/hard_em.hpp"
#include "dgsm/tasks/tasks.hpp"

namespace dgsm::tasks {

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct FoldReport {
  std::size_t fold = 0;
  std::size_t test_floor = 0;
  std::size_t num_train = 0;
  std::size_t num_test_inliers = 0;
  std::size_t num_test_novel = 0;
  std::string model_hash;
  double initial_train_loglik = 0.0;
  double final_train_loglik = 0.0;
  std::size_t fixed_point_iteration = 0;
  std::optional<data::ConfusionResult> confusion;
  std::optional<data::RocResult> roc;
  std::optional<double> completion_accuracy;
  std::optional<double> empty_mask_consistency;  // fraction where empty-mask completion == classify
  std::optional<double> prototype_consistency;   // fraction of prototypes classified as their class
};

struct ExperimentReport {
  std::vector<FoldReport> folds;
  std::optional<data::RocResult> pooled_roc;  // scores of all folds in one sweep
  double seconds = 0.0;
};

namespace detail {

inline bool wants(const Config& c, const std::string& task) {
  const auto& t = c.experiment.tasks;
  return std::find(t.begin(), t.end(), task) != t.end();
}

inline std::ofstream open_csv(const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << header << '\n';
  return out;
}

inline std::string fmt(double x) { return spn::format_double(x); }

inline std::string fold_error(std::size_t fold, const std::string& stage, const Error& e) {
  return "fold " + std::to_string(fold) + " " + stage + ": " + e.message();
}

}  // namespace detail

/// Leave-one-floor-out protocol. Per fold: build the model from the config
/// seed, train it once, then run every requested task on the fold's test set
/// against that one weight vector; every task row records its hash.
/// Outputs go to `out_dir`; the CSV files hold no timing information, so two
/// runs with the same configuration write identical CSVs.
inline ExperimentReport run_experiment(const Config& config, const std::vector<data::PlaceSample>& samples,
                                       const std::string& out_dir,
                                       const std::function<void(const std::string&)>& log = {}) {
  namespace fs = std::filesystem;
  using detail::fmt;
  const auto t0 = std::chrono::steady_clock::now();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  if (config.experiment.tasks.empty()) throw Error(ErrorKind::InvalidParams, "no tasks selected");
  if (config.experiment.mask_span > config.spec.angular_bins) {
    throw Error(ErrorKind::InvalidParams, "mask span exceeds the angular bin count");
  }
  for (const auto& s : samples) {
    if (s.polar.spec.num_cells() != config.spec.num_cells() || s.polar.cells.size() != config.spec.num_cells()) {
      throw Error(ErrorKind::ShapeMismatch, "sample " + std::to_string(s.id) + " does not match the grid spec");
    }
    if (!data::is_novel_label(s.label) &&
        std::find(config.model.classes.begin(), config.model.classes.end(), s.label) == config.model.classes.end()) {
      throw Error(ErrorKind::UnknownLabel, "sample " + std::to_string(s.id) + " has label '" + s.label +
                                               "' outside model.classes");
    }
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  const bool do_classify = detail::wants(config, "classify");
  const bool do_novelty = detail::wants(config, "novelty");
  const bool do_prototype = detail::wants(config, "prototype");
  const bool do_complete = detail::wants(config, "complete");
  const auto& classes = config.model.classes;
  const std::size_t threads = resolve_threads(config.threads);

  std::ofstream classification, novelty, completion, prototypes, confusion_csv, roc_csv;
  if (do_classify) {
    std::string header = "fold,id,label,predicted";
    for (const auto& c : classes) header += ",log_joint_" + c;
    classification = detail::open_csv(out / "classification.csv", header + ",model_hash");
    confusion_csv = detail::open_csv(out / "confusion.csv", "fold,true_label,predicted_label,rate");
  }
  if (do_novelty) {
    novelty = detail::open_csv(out / "novelty.csv", "fold,id,label,inlier,score,model_hash");
    roc_csv = detail::open_csv(out / "roc.csv", "fold,fpr,tpr,threshold");
  }
  if (do_complete) {
    completion = detail::open_csv(out / "completion.csv",
                                  "fold,id,label,mask_start,masked_cells,accuracy,predicted,"
                                  "empty_mask_predicted,classify_predicted,log_value,model_hash");
  }
  if (do_prototype) {
    prototypes = detail::open_csv(out / "prototypes.csv",
                                  "fold,class,classified_as,empty,occupied,unknown,model_hash");
  }

  ExperimentReport report;
  std::vector<data::ScoredSample> pooled_scores;
  const std::size_t floors = std::max(config.world.floors, data::count_floors(samples));
  const auto plan = data::make_split_plan(samples, floors);

  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    const auto& fold = plan.folds[k];
    FoldReport fr;
    fr.fold = k;
    fr.test_floor = fold.test_floor;
    fr.num_train = fold.train.size();

    std::vector<std::size_t> inliers, novel;
    for (auto i : fold.test) (data::is_novel_label(samples[i].label) ? novel : inliers).push_back(i);
    fr.num_test_inliers = inliers.size();
    fr.num_test_novel = novel.size();
    if (fold.train.empty()) throw Error(ErrorKind::InvalidParams, "fold " + std::to_string(k) + " has no training samples");

    // Build and train once.
    DgsmModel model = build_dgsm(config.spec, config.model, derive_seed(config.seed, {0x6d6f64656cULL, k}));
    std::vector<spn::Evidence> train;
    train.reserve(fold.train.size());
    for (auto i : fold.train) {
      train.push_back(attach_class_evidence(grid::polar_to_evidence(samples[i].polar), model.latent, samples[i].label));
    }
    say("fold " + std::to_string(k) + ": training on " + std::to_string(train.size()) + " samples");
    spn::TrainConfig tc = config.train;
    tc.threads = threads;
    spn::TrainResult trained = [&] {
      try {
        return spn::train(model.graph, train, tc);
      } catch (const Error& e) {
        throw Error(e.kind(), detail::fold_error(k, "training", e));
      }
    }();
    model.graph = std::move(trained.graph);
    fr.initial_train_loglik = trained.initial_mean_loglik;
    fr.final_train_loglik = trained.log.back().mean_train_loglik;
    fr.fixed_point_iteration = trained.fixed_point_iteration;
    fr.model_hash = hash_hex(spn::weight_hash(model.graph));
    {
      std::ofstream tl(out / ("train_log_fold" + std::to_string(k) + ".csv"));
      spn::write_training_log_csv(tl, trained.log);
    }
    if (config.experiment.save_models) save_model((out / ("model_fold" + std::to_string(k) + ".spn")).string(), model);
    say("fold " + std::to_string(k) + ": trained, model " + fr.model_hash);

    std::vector<spn::Workspace> spaces(threads);

    if (do_classify) {
      std::vector<Classification> results(inliers.size());
      parallel_for(inliers.size(), threads, [&](std::size_t i, std::size_t w) {
        results[i] = classify(model, samples[inliers[i]].polar, spaces[w]);
      });
      std::vector<std::string> truth, predicted;
      for (std::size_t i = 0; i < inliers.size(); ++i) {
        const auto& s = samples[inliers[i]];
        truth.push_back(s.label);
        predicted.push_back(model.latent.label_of(results[i].predicted));
        classification << k << ',' << s.id << ',' << s.label << ',' << predicted.back();
        for (double v : results[i].log_joint) classification << ',' << fmt(v);
        classification << ',' << fr.model_hash << '\n';
      }
      try {
        fr.confusion = data::confusion(truth, predicted, classes);
      } catch (const Error& e) {
        throw Error(e.kind(), detail::fold_error(k, "confusion", e));
      }
      for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = 0; j < classes.size(); ++j)
          confusion_csv << k << ',' << classes[i] << ',' << classes[j] << ',' << fmt(fr.confusion->matrix[i][j]) << '\n';
    }

    if (do_novelty) {
      std::vector<double> scores(fold.test.size());
      parallel_for(fold.test.size(), threads, [&](std::size_t i, std::size_t w) {
        scores[i] = novelty_score(model, samples[fold.test[i]].polar, spaces[w]);
      });
      std::vector<data::ScoredSample> scored;
      for (std::size_t i = 0; i < fold.test.size(); ++i) {
        const auto& s = samples[fold.test[i]];
        const bool inlier = !data::is_novel_label(s.label);
        scored.push_back({scores[i], inlier});
        novelty << k << ',' << s.id << ',' << s.label << ',' << (inlier ? 1 : 0) << ',' << fmt(scores[i]) << ','
                << fr.model_hash << '\n';
      }
      pooled_scores.insert(pooled_scores.end(), scored.begin(), scored.end());
      if (!inliers.empty() && !novel.empty()) {
        fr.roc = data::roc_auc(scored);
        for (const auto& p : fr.roc->points)
          roc_csv << k << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << ',' << fmt(p.threshold) << '\n';
      }
    }

    if (do_complete) {
      struct Row {
        std::size_t start = 0;
        double accuracy = 0.0;
        Completion masked, empty;
        std::uint32_t classified = 0;
        grid::PolarGrid filled;
      };
      std::vector<Row> rows(inliers.size());
      parallel_for(inliers.size(), threads, [&](std::size_t i, std::size_t w) {
        const auto& s = samples[inliers[i]];
        Row& r = rows[i];
        Rng rng(derive_seed(config.seed, {0x6d61736bULL, k, s.id}));
        r.start = rng.below(config.spec.angular_bins);
        const auto full = grid::polar_to_evidence(s.polar);
        const auto m = grid::mask_view(full, config.spec, r.start, config.experiment.mask_span);
        r.masked = complete(model, m.evidence, m.masked, config.experiment.completion_mode, spaces[w]);
        r.accuracy = data::completion_accuracy(s.polar, r.masked.assignment, m.masked);
        r.empty = complete(model, full, {}, config.experiment.completion_mode, spaces[w]);
        r.classified = classify(model, full, spaces[w]).predicted;
        r.filled = grid::apply_assignment(s.polar, r.masked.assignment);
      });
      std::vector<double> accs;
      std::size_t consistent = 0;
      for (std::size_t i = 0; i < inliers.size(); ++i) {
        const auto& s = samples[inliers[i]];
        const Row& r = rows[i];
        accs.push_back(r.accuracy);
        consistent += r.empty.predicted == r.classified ? 1 : 0;
        completion << k << ',' << s.id << ',' << s.label << ',' << r.start << ','
                   << config.experiment.mask_span * config.spec.radial_bins << ',' << fmt(r.accuracy) << ','
                   << model.latent.label_of(r.masked.predicted) << ',' << model.latent.label_of(r.empty.predicted)
                   << ',' << model.latent.label_of(r.classified) << ',' << fmt(r.masked.log_value) << ','
                   << fr.model_hash << '\n';
      }
      if (!inliers.empty()) {
        fr.completion_accuracy = data::mean(accs);
        fr.empty_mask_consistency = static_cast<double>(consistent) / static_cast<double>(inliers.size());
      }
      if (config.experiment.render) {
        // One render per class: truth | masked | completed.
        std::set<std::string> done;
        for (std::size_t i = 0; i < inliers.size(); ++i) {
          const auto& s = samples[inliers[i]];
          if (!done.insert(s.label).second) continue;
          grid::PolarGrid masked_view = s.polar;
          for (const auto& [v, value] : rows[i].masked.assignment) masked_view.cells[v] = grid::Occupancy::Unknown;
          const auto img = grid::side_by_side(
              grid::side_by_side(grid::render_polar(s.polar), grid::render_polar(masked_view)),
              grid::render_polar(rows[i].filled));
          grid::write_pgm((out / ("completion_fold" + std::to_string(k) + "_" + s.label + ".pgm")).string(), img);
        }
      }
    }

    if (do_prototype) {
      std::size_t consistent = 0;
      for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto proto = generate_prototype(model, classes[c], spaces[0]);
        const auto cls = classify(model, proto, spaces[0]);
        consistent += cls.predicted == c ? 1 : 0;
        prototypes << k << ',' << classes[c] << ',' << model.latent.label_of(cls.predicted) << ','
                   << proto.count(grid::Occupancy::Empty) << ',' << proto.count(grid::Occupancy::Occupied) << ','
                   << proto.count(grid::Occupancy::Unknown) << ',' << fr.model_hash << '\n';
        if (config.experiment.render) {
          grid::write_pgm((out / ("prototype_fold" + std::to_string(k) + "_" + classes[c] + ".pgm")).string(),
                          grid::render_polar(proto));
        }
      }
      fr.prototype_consistency = static_cast<double>(consistent) / static_cast<double>(classes.size());
    }

    say("fold " + std::to_string(k) + ": done");
    report.folds.push_back(std::move(fr));
  }

  if (do_novelty) {
    bool pos = false, neg = false;
    for (const auto& s : pooled_scores) (s.inlier ? pos : neg) = true;
    if (pos && neg) {
      report.pooled_roc = data::roc_auc(pooled_scores);
      for (const auto& p : report.pooled_roc->points)
        roc_csv << "pooled," << fmt(p.fpr) << ',' << fmt(p.tpr) << ',' << fmt(p.threshold) << '\n';
    }
  }

  // Per-fold metrics, then mean and stddev over folds.
  std::map<std::string, std::vector<double>> columns;
  std::vector<std::string> names;
  auto column = [&](const std::string& name, double v) {
    if (!columns.count(name)) names.push_back(name);
    columns[name].push_back(v);
  };
  for (const auto& f : report.folds) {
    column("initial_train_loglik", f.initial_train_loglik);
    column("final_train_loglik", f.final_train_loglik);
    if (f.confusion) {
      column("mean_class_accuracy", f.confusion->mean_accuracy);
      for (std::size_t c = 0; c < classes.size(); ++c) column("accuracy_" + classes[c], f.confusion->per_class[c]);
    }
    if (f.roc) column("auc", f.roc->auc);
    if (f.completion_accuracy) column("completion_accuracy", *f.completion_accuracy);
    if (f.empty_mask_consistency) column("empty_mask_consistency", *f.empty_mask_consistency);
    if (f.prototype_consistency) column("prototype_consistency", *f.prototype_consistency);
  }
  {
    std::string header = "fold,test_floor,num_train,num_test_inliers,num_test_novel,fixed_point_iteration";
    for (const auto& n : names) header += "," + n;
    auto metrics = detail::open_csv(out / "metrics.csv", header + ",model_hash");
    for (std::size_t i = 0; i < report.folds.size(); ++i) {
      const auto& f = report.folds[i];
      metrics << f.fold << ',' << f.test_floor << ',' << f.num_train << ',' << f.num_test_inliers << ','
              << f.num_test_novel << ',' << f.fixed_point_iteration;
      for (const auto& n : names) metrics << ',' << (i < columns[n].size() ? fmt(columns[n][i]) : "");
      metrics << ',' << f.model_hash << '\n';
    }
    auto aggregate = detail::open_csv(out / "aggregate.csv", "metric,mean,stddev,folds");
    for (const auto& n : names) {
      aggregate << n << ',' << fmt(data::mean(columns[n])) << ',' << fmt(data::stddev(columns[n])) << ','
                << columns[n].size() << '\n';
    }
    if (report.pooled_roc) aggregate << "pooled_auc," << fmt(report.pooled_roc->auc) << ",0,1\n";
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream summary(out / "summary.txt");
    char line[256];
    summary << "folds: " << report.folds.size() << "  tasks:";
    for (const auto& t : config.experiment.tasks) summary << ' ' << t;
    summary << "\n\n";
    for (const auto& f : report.folds) {
      summary << "fold " << f.fold << " (test floor " << f.test_floor << ", " << f.num_train << " train, "
              << f.num_test_inliers << " inlier + " << f.num_test_novel << " novel test)  model " << f.model_hash
              << "\n";
      std::snprintf(line, sizeof line, "  train loglik %.3f -> %.3f", f.initial_train_loglik, f.final_train_loglik);
      summary << line;
      if (f.fixed_point_iteration) summary << " (fixed point at iteration " << f.fixed_point_iteration << ")";
      summary << "\n";
      if (f.confusion) {
        std::snprintf(line, sizeof line, "  mean class accuracy %.4f\n", f.confusion->mean_accuracy);
        summary << line;
        for (std::size_t i = 0; i < classes.size(); ++i) {
          std::snprintf(line, sizeof line, "    %-14s", classes[i].c_str());
          summary << line;
          for (double v : f.confusion->matrix[i]) {
            std::snprintf(line, sizeof line, " %.3f", v);
            summary << line;
          }
          summary << "\n";
        }
      }
      if (f.roc) {
        std::snprintf(line, sizeof line, "  novelty AUC %.4f\n", f.roc->auc);
        summary << line;
      }
      if (f.completion_accuracy) {
        std::snprintf(line, sizeof line, "  completion accuracy %.4f, empty-mask consistency %.4f\n",
                      *f.completion_accuracy, *f.empty_mask_consistency);
        summary << line;
      }
      if (f.prototype_consistency) {
        std::snprintf(line, sizeof line, "  prototypes classified as their class: %.2f\n", *f.prototype_consistency);
        summary << line;
      }
    }
    summary << "\naggregate (mean +- stddev over folds)\n";
    for (const auto& n : names) {
      std::snprintf(line, sizeof line, "  %-28s %.4f +- %.4f\n", n.c_str(), data::mean(columns[n]),
                    data::stddev(columns[n]));
      summary << line;
    }
    if (report.pooled_roc) {
      std::snprintf(line, sizeof line, "  %-28s %.4f\n", "pooled_auc", report.pooled_roc->auc);
      summary << line;
    }
    std::snprintf(line, sizeof line, "\nruntime %.1f s\n", report.seconds);
    summary << line;
  }
  return report;
}

}  // namespace dgsm::tasks
