#pragma once

// File-level workflows behind the command-line tool: synthesis, snapshot-diff
// labelling, benchmarking, leave-one-trial-out meta-training, meta-learned
// selection/ensembling and reporting. Every writer sorts its records before
// emitting, so outputs do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "trialod/cd_render.hpp"
#include "trialod/dataset.hpp"
#include "trialod/detectors.hpp"
#include "trialod/ensemble.hpp"
#include "trialod/manifest.hpp"
#include "trialod/metafeatures.hpp"
#include "trialod/metamodel.hpp"
#include "trialod/metrics.hpp"
#include "trialod/ranking.hpp"
#include "trialod/random.hpp"
#include "trialod/selection.hpp"
#include "trialod/synth.hpp"

namespace trialod {

using ojson = nlohmann::ordered_json;

/// Closed vocabulary of result method names, in report order.
inline const std::vector<std::string>& method_vocabulary() {
  static const std::vector<std::string> names = {"iforest",    "ecod",       "knn",      "lof",  "pca",
                                                 "hbos",       "ensemble-n", "ensemble-p", "metaod-r", "mepe"};
  return names;
}

inline bool is_known_method(const std::string& m) {
  const auto& v = method_vocabulary();
  return std::find(v.begin(), v.end(), m) != v.end();
}

struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<std::string> id_column;
  DetectorParams detector_params;
  int k = 3;
  double alpha = 0.05;
  double lambda = 1.0;
  bool with_ensembles = false;
  std::ostream* log = &std::cerr;

  void validate() const {
    if (jobs < 1) throw Error(ErrorKind::usage, "--jobs must be >= 1");
    detector_params.validate();
    MePEConfig{k}.validate();
    if (!(lambda > 0.0)) throw Error(ErrorKind::usage, "--lambda must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::usage, "--alpha must lie in (0, 1)");
  }
};

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the
/// lowest-index failure.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Serialized logging from worker threads.
class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out) {}
  void operator()(const std::string& line) {
    if (!out_) return;
    std::lock_guard<std::mutex> lock(mu_);
    *out_ << line << '\n';
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Results records

struct ResultRecord {
  std::string trial;
  int snapshot = 0;
  std::string dataset_id;
  std::string method;
  MetricResult metrics;

  auto key() const { return std::tie(trial, snapshot, dataset_id, method); }
};

inline ResultRecord make_record(const Provenance& p, std::string method, const MetricResult& m) {
  return ResultRecord{p.trial, p.snapshot, p.dataset_id, std::move(method), m};
}

inline std::string results_to_jsonl(std::vector<ResultRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  std::string out;
  for (const auto& r : records) {
    const ojson row = {{"trial", r.trial},       {"snapshot", r.snapshot},         {"dataset_id", r.dataset_id},
                       {"method", r.method},     {"auroc", r.metrics.auroc},       {"ci_low", r.metrics.ci_low},
                       {"ci_high", r.metrics.ci_high}, {"aupr", r.metrics.aupr},   {"positive", r.metrics.positive_performance}};
    out += row.dump() + "\n";
  }
  return out;
}

inline std::vector<ResultRecord> read_results(const fs::path& path) {
  std::vector<ResultRecord> out;
  const std::string text = csv::read_file(path.string());
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = csv::trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ResultRecord r;
      r.trial = j.at("trial").get<std::string>();
      r.snapshot = j.at("snapshot").get<int>();
      r.dataset_id = j.at("dataset_id").get<std::string>();
      r.method = j.at("method").get<std::string>();
      r.metrics.auroc = j.at("auroc").get<double>();
      r.metrics.ci_low = j.at("ci_low").get<double>();
      r.metrics.ci_high = j.at("ci_high").get<double>();
      r.metrics.aupr = j.at("aupr").get<double>();
      r.metrics.positive_performance = j.at("positive").get<bool>();
      if (!is_known_method(r.method)) throw Error(ErrorKind::parse, "unknown method '" + r.method + "'");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading

inline Dataset load_dataset(const ManifestEntry& entry, const std::optional<std::string>& id_column,
                            bool require_labels) {
  Dataset ds = encode_and_impute(load_csv(entry.data.string(), id_column), entry.provenance());
  if (entry.labels) {
    attach_labels(ds, read_labels(entry.labels->string()));
  } else if (require_labels) {
    throw Error(ErrorKind::usage, "dataset " + entry.trial + "/" + entry.dataset_id + " has no labels; run `label` first");
  }
  return ds;
}

inline std::string provenance_key(const Provenance& p) {
  return p.trial + "/" + std::to_string(p.snapshot) + "/" + p.dataset_id;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOutput {
  fs::path manifest;        ///< preliminary data, with "final" paths
  fs::path final_manifest;  ///< one locked table per (trial, dataset_id)
  fs::path truth_manifest;  ///< preliminary data with ground-truth labels
};

inline constexpr const char* kSynthIdColumn = "__id";

inline SynthOutput write_synth(const SynthSpec& spec, const fs::path& out_dir) {
  const auto collection = synth_generate(spec);
  fs::create_directories(out_dir);

  const auto table_csv = [](const Dataset& ds, const Matrix& values) {
    RawTable t = to_raw(ds, std::string(kSynthIdColumn));
    for (std::size_t j = 0; j < ds.d(); ++j) {
      for (std::size_t i = 0; i < ds.n(); ++i) {
        t.columns[j][i] = csv::format_number(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
    return t;
  };

  Manifest prelim, truth, finals;
  std::map<std::pair<std::string, std::string>, RawTable> final_tables;
  for (const auto& sd : collection) {
    const auto& p = sd.data.provenance;
    const fs::path dir = out_dir / "data" / p.trial;
    fs::create_directories(dir);
    fs::create_directories(out_dir / "truth" / p.trial);
    const std::string stem = "s" + std::to_string(p.snapshot) + "_" + p.dataset_id;
    const fs::path data_path = dir / (stem + ".csv");
    const fs::path truth_path = out_dir / "truth" / p.trial / (stem + ".csv");
    const fs::path final_path = out_dir / "final" / p.trial / (p.dataset_id + ".csv");
    csv::write_file(data_path.string(), to_csv(table_csv(sd.data, sd.data.matrix)));
    csv::write_file(truth_path.string(), labels_to_csv(sd.data.ids, *sd.data.labels));

    // The locked table accumulates every snapshot's rows with anomalies corrected.
    RawTable corrected = table_csv(sd.data, sd.corrected);
    auto [it, inserted] = final_tables.try_emplace({p.trial, p.dataset_id}, corrected);
    if (!inserted) {
      RawTable& acc = it->second;
      if (acc.column_names.size() < corrected.column_names.size()) {
        for (std::size_t j = acc.column_names.size(); j < corrected.column_names.size(); ++j) {
          acc.column_names.push_back(corrected.column_names[j]);
          acc.columns.emplace_back(acc.rows(), Cell{});
        }
      }
      for (std::size_t i = 0; i < corrected.rows(); ++i) {
        acc.id_values.push_back(corrected.id_values[i]);
        for (std::size_t j = 0; j < acc.columns.size(); ++j) {
          acc.columns[j].push_back(j < corrected.columns.size() ? corrected.columns[j][i] : Cell{});
        }
      }
    }
    ManifestEntry e{p.trial, p.snapshot, p.dataset_id, data_path, final_path, std::nullopt};
    prelim.push_back(e);
    e.final_data.reset();
    e.labels = truth_path;
    truth.push_back(e);
  }
  for (const auto& [key, table] : final_tables) {
    const fs::path path = out_dir / "final" / key.first / (key.second + ".csv");
    fs::create_directories(path.parent_path());
    csv::write_file(path.string(), to_csv(table));
    finals.push_back(ManifestEntry{key.first, spec.snapshots, key.second, path, std::nullopt, std::nullopt});
  }

  SynthOutput out{out_dir / "manifest.json", out_dir / "final_manifest.json", out_dir / "truth_manifest.json"};
  write_manifest(out.manifest, prelim);
  write_manifest(out.final_manifest, finals);
  write_manifest(out.truth_manifest, truth);
  return out;
}

// ---------------------------------------------------------------------------
// label

struct LabelSummary {
  fs::path manifest;
  std::size_t labelled = 0;
  std::size_t skipped = 0;
  std::vector<std::pair<std::string, double>> irregular_fraction;  ///< per labelled dataset
};

/// Labels every preliminary dataset against its locked counterpart. The final
/// table comes from `final_manifest` (matched on trial + dataset_id) or from the
/// entry's own "final" field.
inline LabelSummary run_label(const fs::path& prelim_manifest, const std::optional<fs::path>& final_manifest,
                              const std::string& key, const fs::path& out_dir, const RunConfig& cfg = {}) {
  Logger log(cfg.log);
  const Manifest prelim = read_manifest(prelim_manifest);
  std::map<std::pair<std::string, std::string>, fs::path> finals;
  if (final_manifest) {
    for (const auto& e : read_manifest(*final_manifest)) finals[{e.trial, e.dataset_id}] = e.data;
  }
  fs::create_directories(out_dir);

  struct Outcome {
    std::optional<ManifestEntry> entry;
    double fraction = 0.0;
    std::string warning;
  };
  std::vector<Outcome> outcomes(prelim.size());
  parallel_for(prelim.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = prelim[i];
    std::optional<fs::path> final_path = e.final_data;
    if (final_manifest) {
      const auto it = finals.find({e.trial, e.dataset_id});
      final_path = it == finals.end() ? std::nullopt : std::optional<fs::path>(it->second);
    }
    if (!final_path) {
      outcomes[i].warning = "no final table for " + provenance_key(e.provenance()) + "; skipped";
      return;
    }
    const RawTable a = load_csv(e.data.string(), key);
    const RawTable b = load_csv(final_path->string(), key);
    const auto labels = diff_labels(a, b, key);
    const fs::path path = out_dir / "labels" / e.trial / ("s" + std::to_string(e.snapshot) + "_" + e.dataset_id + ".csv");
    fs::create_directories(path.parent_path());
    csv::write_file(path.string(), labels_to_csv(a.id_values, labels));
    ManifestEntry labelled = e;
    labelled.final_data = final_path;
    labelled.labels = path;
    outcomes[i].entry = labelled;
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    outcomes[i].fraction = labels.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(labels.size());
  });

  LabelSummary summary;
  Manifest out;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].entry) {
      log("warning: " + outcomes[i].warning);
      ++summary.skipped;
      continue;
    }
    out.push_back(*outcomes[i].entry);
    ++summary.labelled;
    summary.irregular_fraction.emplace_back(provenance_key(prelim[i].provenance()), outcomes[i].fraction);
  }
  if (summary.labelled == 0) throw Error(ErrorKind::usage, "no preliminary dataset could be matched to a final table");
  summary.manifest = out_dir / "labeled_manifest.json";
  write_manifest(summary.manifest, out);
  return summary;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOutput {
  fs::path results;
  fs::path performance;
  fs::path summary;
  std::size_t records = 0;
};

inline std::uint64_t seed_for(const RunConfig& cfg, const Provenance& p) {
  return dataset_seed(cfg.seed, p.trial, p.dataset_id);
}

inline BenchOutput run_bench(const fs::path& manifest_path, const fs::path& out_dir, const RunConfig& cfg) {
  cfg.validate();
  Logger log(cfg.log);
  const Manifest manifest = read_manifest(manifest_path);
  fs::create_directories(out_dir);

  struct Outcome {
    std::vector<ResultRecord> records;
    PerformanceRow perf;
    std::vector<std::string> warnings;
  };
  std::vector<Outcome> outcomes(manifest.size());
  parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
    const Dataset ds = load_dataset(manifest[i], cfg.id_column, true);
    auto& out = outcomes[i];
    out.perf.provenance = ds.provenance;
    out.perf.provenance.notes.clear();
    const std::uint64_t seed = seed_for(cfg, ds.provenance);
    const auto& labels = *ds.labels;
    const bool both_classes = std::count(labels.begin(), labels.end(), 1) > 0 &&
                              std::count(labels.begin(), labels.end(), 0) > 0;
    if (!both_classes) {
      out.warnings.push_back(provenance_key(ds.provenance) + ": labels contain one class; metrics undefined");
      return;
    }
    EnsembleInput members;
    for (auto kind : kAllDetectors) {
      try {
        ScoreVector sv = score(ds, DetectorSpec{kind, cfg.detector_params, seed});
        const auto m = evaluate(sv.scores, labels);
        out.records.push_back(make_record(ds.provenance, sv.method, m));
        out.perf.auroc[index_of(kind)] = m.auroc;
        members.members.push_back(std::move(sv));
      } catch (const Error& e) {
        out.warnings.push_back(provenance_key(ds.provenance) + ": " + std::string(to_string(kind)) + " failed: " + e.what());
      }
    }
    if (cfg.with_ensembles && !members.members.empty()) {
      out.records.push_back(make_record(ds.provenance, "ensemble-n", evaluate(ensemble_naive(members).scores, labels)));
      out.records.push_back(make_record(ds.provenance, "ensemble-p", evaluate(ensemble_prob(members).scores, labels)));
    }
  });

  std::vector<ResultRecord> records;
  PerformanceMatrix perf;
  for (auto& o : outcomes) {
    for (const auto& w : o.warnings) log("warning: " + w);
    records.insert(records.end(), o.records.begin(), o.records.end());
    perf.rows.push_back(o.perf);
  }
  std::sort(perf.rows.begin(), perf.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.provenance.trial, a.provenance.snapshot, a.provenance.dataset_id) <
           std::tie(b.provenance.trial, b.provenance.snapshot, b.provenance.dataset_id);
  });

  // Best-performer fractions over datasets with all six detectors (ties credit every tied detector).
  std::array<std::size_t, kNumDetectors> best{};
  std::size_t complete = 0, any_positive = 0, flagged = 0;
  std::map<std::string, std::vector<bool>> positives;
  for (const auto& r : records) {
    if (parse_detector(r.method)) positives[r.trial + "\x1f" + std::to_string(r.snapshot) + "\x1f" + r.dataset_id].push_back(r.metrics.positive_performance);
  }
  for (const auto& [key, flags] : positives) {
    if (flags.size() != kNumDetectors) continue;
    ++flagged;
    if (std::find(flags.begin(), flags.end(), true) != flags.end()) ++any_positive;
  }
  for (const auto& row : perf.rows) {
    if (std::any_of(row.auroc.begin(), row.auroc.end(), [](const auto& v) { return !v; })) continue;
    ++complete;
    double top = 0.0;
    for (const auto& v : row.auroc) top = std::max(top, *v);
    for (std::size_t k = 0; k < kNumDetectors; ++k) best[k] += *row.auroc[k] == top ? 1 : 0;
  }
  ojson summary = {{"datasets", manifest.size()}, {"complete_datasets", complete}, {"records", records.size()}};
  ojson best_json = ojson::object();
  for (auto kind : kAllDetectors) {
    best_json[std::string(to_string(kind))] =
        complete ? static_cast<double>(best[index_of(kind)]) / static_cast<double>(complete) : 0.0;
  }
  summary["best_performer_fraction"] = best_json;
  summary["any_positive_fraction"] = flagged ? static_cast<double>(any_positive) / static_cast<double>(flagged) : 0.0;
  summary["ci_method"] = "delong";
  summary["ap_method"] = "step";

  BenchOutput out{out_dir / "results.jsonl", out_dir / "performance.csv", out_dir / "bench_summary.json", records.size()};
  csv::write_file(out.results.string(), results_to_jsonl(records));
  csv::write_file(out.performance.string(), performance_to_csv(perf));
  csv::write_file(out.summary.string(), summary.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// meta train / select / mepe

struct MetaTrainOutput {
  std::vector<fs::path> models;
  fs::path audit;
  fs::path meta_features;
};

inline std::string meta_features_to_csv(const std::vector<MetaFeatureVector>& metas) {
  std::string out;
  csv::Row header = {"trial", "snapshot", "dataset_id"};
  for (auto name : kMetaFeatureNames) header.emplace_back(name);
  csv::append_row(out, header);
  for (const auto& m : metas) {
    csv::Row row = {m.provenance.trial, std::to_string(m.provenance.snapshot), m.provenance.dataset_id};
    for (double v : m.values) row.push_back(csv::format_number(v));
    csv::append_row(out, row);
  }
  return out;
}

inline std::vector<MetaFeatureVector> compute_meta_features(const Manifest& manifest, const RunConfig& cfg) {
  std::vector<MetaFeatureVector> metas(manifest.size());
  parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
    auto mv = extract_meta_features(load_dataset(manifest[i], cfg.id_column, false));
    mv.provenance.notes.clear();
    metas[i] = std::move(mv);
  });
  return metas;
}

inline fs::path model_path(const fs::path& models_dir, const std::string& trial) {
  return models_dir / (trial + ".json");
}

inline MetaTrainOutput run_meta_train(const fs::path& manifest_path, const fs::path& perf_path, const fs::path& out_dir,
                                      const RunConfig& cfg) {
  cfg.validate();
  const Manifest manifest = read_manifest(manifest_path);
  std::set<std::string> trials;
  for (const auto& e : manifest) trials.insert(e.trial);
  if (trials.size() < 2) {
    throw Error(ErrorKind::usage, "leave-one-trial-out needs at least two trials; manifest has " + std::to_string(trials.size()));
  }
  const PerformanceMatrix perf_all = performance_from_csv(csv::read_file(perf_path.string()));
  std::map<std::string, PerformanceRow> perf_by_key;
  for (const auto& r : perf_all.rows) perf_by_key[provenance_key(r.provenance)] = r;

  const auto metas = compute_meta_features(manifest, cfg);
  PerformanceMatrix perf;
  for (const auto& e : manifest) {
    const auto it = perf_by_key.find(provenance_key(e.provenance()));
    PerformanceRow row{e.provenance(), {}};
    if (it != perf_by_key.end()) row.auroc = it->second.auroc;
    perf.rows.push_back(row);
  }

  MetaTrainOutput out;
  const fs::path models_dir = out_dir / "models";
  fs::create_directories(models_dir);
  std::string audit;
  for (const auto& trial : trials) {
    const MetaModel model = fit_meta_model(perf, metas, trial, MetaFitOptions{cfg.lambda, 8, cfg.seed});
    if (std::find(model.trials_used.begin(), model.trials_used.end(), trial) != model.trials_used.end()) {
      throw Error(ErrorKind::integrity, "meta model for held-out trial '" + trial + "' was trained on it");
    }
    const fs::path path = model_path(models_dir, trial);
    csv::write_file(path.string(), to_json(model).dump(2) + "\n");
    out.models.push_back(path);
    const ojson line = {{"held_out_trial", trial}, {"trials_used", model.trials_used}, {"training_rows", model.training_rows}};
    audit += line.dump() + "\n";
  }
  out.audit = out_dir / "audit.jsonl";
  out.meta_features = out_dir / "meta_features.csv";
  csv::write_file(out.audit.string(), audit);
  csv::write_file(out.meta_features.string(), meta_features_to_csv(metas));
  return out;
}

enum class MetaMode { select, mepe };

/// Scores every dataset with the model that held out its trial and merges the
/// rows into `results_path` (replacing earlier rows of the same method).
inline std::size_t run_meta_apply(const fs::path& manifest_path, const fs::path& models_dir, const fs::path& results_path,
                                  MetaMode mode, const RunConfig& cfg) {
  cfg.validate();
  Logger log(cfg.log);
  const Manifest manifest = read_manifest(manifest_path);
  std::map<std::string, MetaModel> models;
  for (const auto& e : manifest) {
    if (models.count(e.trial)) continue;
    const fs::path path = model_path(models_dir, e.trial);
    MetaModel m = meta_model_from_json(nlohmann::json::parse(csv::read_file(path.string())));
    if (m.held_out_trial != e.trial ||
        std::find(m.trials_used.begin(), m.trials_used.end(), e.trial) != m.trials_used.end()) {
      throw Error(ErrorKind::integrity, path.string() + " was not trained with trial '" + e.trial + "' held out");
    }
    models.emplace(e.trial, std::move(m));
  }
  const std::string method = mode == MetaMode::select ? "metaod-r" : "mepe";
  const DetectorRunner runner = default_runner(cfg.detector_params);

  std::vector<std::optional<ResultRecord>> rows(manifest.size());
  std::vector<std::vector<std::string>> warnings(manifest.size());
  parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
    const Dataset ds = load_dataset(manifest[i], cfg.id_column, true);
    const auto& labels = *ds.labels;
    if (std::count(labels.begin(), labels.end(), 1) == 0 || std::count(labels.begin(), labels.end(), 0) == 0) {
      warnings[i].push_back(provenance_key(ds.provenance) + ": labels contain one class; skipped");
      return;
    }
    const auto meta = extract_meta_features(ds);
    const auto& model = models.at(ds.provenance.trial);
    const std::uint64_t seed = seed_for(cfg, ds.provenance);
    const ScoreVector sv = mode == MetaMode::select
                               ? select_metaod_r(model, meta, ds, seed, runner, &warnings[i])
                               : mepe_score(model, meta, ds, MePEConfig{cfg.k}, seed, runner, &warnings[i]);
    rows[i] = make_record(ds.provenance, method, evaluate(sv.scores, labels));
  });

  std::vector<ResultRecord> records;
  if (fs::exists(results_path)) {
    for (auto& r : read_results(results_path)) {
      if (r.method != method) records.push_back(std::move(r));
    }
  }
  std::size_t added = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& w : warnings[i]) log("warning: " + w);
    if (rows[i]) {
      records.push_back(*rows[i]);
      ++added;
    }
  }
  if (results_path.has_parent_path()) fs::create_directories(results_path.parent_path());
  csv::write_file(results_path.string(), results_to_jsonl(std::move(records)));
  return added;
}

// ---------------------------------------------------------------------------
// report

struct ReportOutput {
  fs::path report;
  fs::path svg;
  fs::path text;
  fs::path tables;
  RankTable ranks;
  CDResult cd;
};

inline ReportOutput run_report(const fs::path& results_path, const fs::path& out_dir, const RunConfig& cfg,
                               const std::vector<std::string>& only_methods = {}) {
  cfg.validate();
  const auto records = read_results(results_path);

  std::vector<std::string> methods;
  for (const auto& m : method_vocabulary()) {
    const bool present = std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.method == m; });
    const bool wanted = only_methods.empty() || std::find(only_methods.begin(), only_methods.end(), m) != only_methods.end();
    if (present && wanted) methods.push_back(m);
  }
  if (methods.size() < 2) throw Error(ErrorKind::input, "report needs results for at least two methods");

  using Key = std::tuple<std::string, int, std::string>;
  std::map<Key, std::map<std::string, const ResultRecord*>> by_dataset;
  for (const auto& r : records) by_dataset[{r.trial, r.snapshot, r.dataset_id}][r.method] = &r;

  ScoreTable table;
  table.methods = methods;
  std::map<std::string, std::size_t> gaps;
  for (const auto& [key, row] : by_dataset) {
    table.row_keys.push_back(std::get<0>(key) + "/" + std::to_string(std::get<1>(key)) + "/" + std::get<2>(key));
    std::vector<std::optional<double>> values;
    for (const auto& m : methods) {
      const auto it = row.find(m);
      if (it == row.end()) {
        ++gaps[m];
        values.emplace_back();
      } else {
        values.emplace_back(it->second->metrics.auroc);
      }
    }
    table.values.push_back(std::move(values));
  }
  RankTable ranks;
  try {
    ranks = rank_table(table);
  } catch (const Error&) {
    std::string detail;
    for (const auto& [m, count] : gaps) detail += " " + m + " missing on " + std::to_string(count) + " datasets;";
    throw Error(ErrorKind::input, "no dataset has results for every method:" + detail);
  }
  if (ranks.n_datasets() < 2) throw Error(ErrorKind::input, "report needs at least two datasets with complete coverage");
  const CDResult cd = critical_difference(ranks, cfg.alpha);

  // Success fractions over datasets with flags from all six detectors.
  std::vector<SuccessRecord> success;
  for (const auto& [key, row] : by_dataset) {
    SuccessRecord s{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}};
    for (auto kind : kAllDetectors) {
      const auto it = row.find(std::string(to_string(kind)));
      if (it != row.end()) s.positive.push_back(it->second->metrics.positive_performance);
    }
    if (s.positive.size() == kNumDetectors) success.push_back(std::move(s));
  }
  const auto fractions = success_fraction(success);

  // Mean AUROC by trial (all methods) and iforest by trial x snapshot.
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> by_trial;
  std::map<std::string, std::map<int, std::pair<double, std::size_t>>> iforest_grid;
  for (const auto& r : records) {
    auto& cell = by_trial[r.trial][r.method];
    cell.first += r.metrics.auroc;
    ++cell.second;
    if (r.method == "iforest") {
      auto& g = iforest_grid[r.trial][r.snapshot];
      g.first += r.metrics.auroc;
      ++g.second;
    }
  }

  ojson report;
  report["methods"] = methods;
  report["avg_ranks"] = ranks.average_ranks;
  report["n_datasets"] = ranks.n_datasets();
  report["excluded_datasets"] = ranks.excluded_rows;
  report["friedman"] = {{"stat", cd.friedman_statistic}, {"p", cd.friedman_p}};
  report["alpha"] = cfg.alpha;
  report["cd"] = cd.critical_distance;
  ojson cliques = ojson::array();
  for (const auto& c : cd.cliques) {
    ojson names = ojson::array();
    for (std::size_t m : c) names.push_back(methods[m]);
    cliques.push_back(names);
  }
  report["cliques"] = cliques;
  ojson per_group = ojson::object();
  for (const auto& [key, v] : fractions.per_trial_snapshot) per_group[key.first + "/" + std::to_string(key.second)] = v;
  ojson per_trial = ojson::object();
  for (const auto& [key, v] : fractions.per_trial) per_trial[key] = v;
  report["success"] = {{"overall", fractions.overall},
                       {"datasets", fractions.datasets},
                       {"per_trial_snapshot", per_group},
                       {"per_trial", per_trial}};
  ojson mean_by_trial = ojson::object();
  for (const auto& [trial, cells] : by_trial) {
    ojson row = ojson::object();
    for (const auto& m : methods) {
      const auto it = cells.find(m);
      if (it != cells.end()) row[m] = it->second.first / static_cast<double>(it->second.second);
    }
    mean_by_trial[trial] = row;
  }
  report["mean_auroc_by_trial"] = mean_by_trial;
  ojson grid = ojson::object();
  for (const auto& [trial, snaps] : iforest_grid) {
    ojson row = ojson::object();
    for (const auto& [snap, cell] : snaps) row[std::to_string(snap)] = cell.first / static_cast<double>(cell.second);
    grid[trial] = row;
  }
  report["iforest_by_trial_snapshot"] = grid;
  report["ci_method"] = "delong";
  report["ap_method"] = "step";

  // Plain-text tables.
  std::string tables = "Mean AUROC by trial\n";
  const std::vector<std::string> headline = {"mepe", "iforest", "ensemble-p"};
  std::vector<std::string> table_methods;
  for (const auto& m : headline) {
    if (std::find(methods.begin(), methods.end(), m) != methods.end()) table_methods.push_back(m);
  }
  for (const auto& m : methods) {
    if (std::find(table_methods.begin(), table_methods.end(), m) == table_methods.end()) table_methods.push_back(m);
  }
  const auto pad = [](std::string s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); };
  const auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };
  std::string header = pad("trial", 12);
  for (const auto& m : table_methods) header += pad(m, 11);
  tables += rstrip(header) + "\n";
  for (const auto& [trial, cells] : by_trial) {
    std::string line = pad(trial, 12);
    for (const auto& m : table_methods) {
      const auto it = cells.find(m);
      line += pad(it == cells.end() ? "-" : detail::fmt("%.3f", it->second.first / static_cast<double>(it->second.second)), 11);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    tables += line + "\n";
  }
  std::set<int> snapshots;
  for (const auto& [trial, snaps] : iforest_grid) {
    for (const auto& [s, cell] : snaps) snapshots.insert(s);
  }
  tables += "\niforest AUROC by trial and snapshot\n";
  header = pad("trial", 12);
  for (int s : snapshots) header += pad(std::to_string(s), 7);
  tables += rstrip(header) + "\n";
  for (const auto& [trial, snaps] : iforest_grid) {
    std::string line = pad(trial, 12);
    for (int s : snapshots) {
      const auto it = snaps.find(s);
      line += pad(it == snaps.end() ? "-" : detail::fmt("%.2f", it->second.first / static_cast<double>(it->second.second)), 7);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    tables += line + "\n";
  }
  tables += "\nDatasets with at least one positive detector by trial and snapshot\n";
  for (const auto& [key, v] : fractions.per_trial_snapshot) {
    tables += pad(key.first, 12) + pad(std::to_string(key.second), 7) + detail::fmt("%.3f", v) + "\n";
  }
  tables += "overall" + std::string(12, ' ') + detail::fmt("%.3f", fractions.overall) + "\n";

  fs::create_directories(out_dir);
  ReportOutput out{out_dir / "report.json", out_dir / "cd.svg", out_dir / "cd.txt", out_dir / "tables.txt", ranks, cd};
  csv::write_file(out.report.string(), report.dump(2) + "\n");
  csv::write_file(out.svg.string(), render_cd_svg(cd, ranks));
  csv::write_file(out.text.string(), render_cd_text(cd, ranks));
  csv::write_file(out.tables.string(), tables);
  return out;
}

}  // namespace trialod
