// trialod: command-line driver for synthesis, labelling, benchmarking,
// meta-learned selection and reporting over manifest-described collections.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trialod/pipeline.hpp"

namespace {

using namespace trialod;

std::optional<std::string> opt_string(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::spec: return 2;
    case ErrorKind::io: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised outlier detection benchmark and meta-learned selection"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string out_dir = "out";
  std::string id_column;
  app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--id-column", id_column, "Column holding row identifiers");
  app.add_option("--k", cfg.k, "MePE ensemble size")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "Nemenyi significance level (0.05 or 0.10)")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "Ridge penalty of the meta model")->capture_default_str();
  app.add_option("--iforest-trees", cfg.detector_params.iforest_trees)->capture_default_str();
  app.add_option("--iforest-subsample", cfg.detector_params.iforest_subsample)->capture_default_str();
  app.add_option("--knn-k", cfg.detector_params.knn_k)->capture_default_str();
  app.add_option("--lof-k", cfg.detector_params.lof_k)->capture_default_str();
  app.add_option("--hbos-bins", cfg.detector_params.hbos_bins)->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic trial-like collection");
  SynthSpec spec;
  std::vector<std::string> kinds;
  synth->add_option("--trials", spec.n_trials)->capture_default_str();
  synth->add_option("--datasets", spec.datasets_per_trial, "Datasets per trial")->capture_default_str();
  synth->add_option("--snapshots", spec.snapshots)->capture_default_str();
  synth->add_option("--n-min", spec.n_range.lo)->capture_default_str();
  synth->add_option("--n-max", spec.n_range.hi)->capture_default_str();
  synth->add_option("--d-min", spec.d_range.lo)->capture_default_str();
  synth->add_option("--d-max", spec.d_range.hi)->capture_default_str();
  synth->add_option("--contamination", spec.contamination)->capture_default_str();
  synth->add_option("--kinds", kinds, "Anomaly kinds cycled across trials");

  // label
  auto* label = app.add_subcommand("label", "Derive irregularity labels by diffing snapshots");
  std::string manifest, final_manifest, key;
  label->add_option("--manifest", manifest, "Preliminary-snapshot manifest")->required();
  label->add_option("--final-manifest", final_manifest, "Locked-table manifest");
  label->add_option("--key", key, "Join key column")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Score every dataset with the six detectors");
  bench->add_option("--manifest", manifest, "Labelled manifest")->required();
  bench->add_flag("--with-ensembles", cfg.with_ensembles, "Also emit ensemble-n and ensemble-p rows");

  // meta
  auto* meta = app.add_subcommand("meta", "Leave-one-trial-out meta-learning");
  meta->require_subcommand(1);
  std::string perf, models, results;
  auto* train = meta->add_subcommand("train", "Fit one meta model per held-out trial");
  train->add_option("--manifest", manifest)->required();
  train->add_option("--perf", perf, "Performance-matrix CSV from bench")->required();
  auto* select = meta->add_subcommand("select", "Score held-out datasets with the top-ranked detector");
  auto* mepe = meta->add_subcommand("mepe", "Score held-out datasets with the top-k probabilistic ensemble");
  for (auto* sub : {select, mepe}) {
    sub->add_option("--manifest", manifest)->required();
    sub->add_option("--models", models, "Directory of meta models (default <out>/models)");
    sub->add_option("--results", results, "Results JSONL to append to (default <out>/results.jsonl)");
  }

  // report
  auto* report = app.add_subcommand("report", "Rank methods, run Friedman/Nemenyi and draw the CD diagram");
  std::vector<std::string> methods;
  report->add_option("--results", results, "Results JSONL")->required();
  report->add_option("--methods", methods, "Restrict to these methods");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.id_column = opt_string(id_column);
    const fs::path out = out_dir;
    if (*synth) {
      spec.seed = cfg.seed;
      if (!kinds.empty()) {
        spec.kinds.clear();
        for (const auto& k : kinds) {
          const auto kind = parse_anomaly_kind(k);
          if (!kind) throw Error(ErrorKind::usage, "unknown anomaly kind '" + k + "'");
          spec.kinds.push_back(*kind);
        }
      }
      const auto res = write_synth(spec, out);
      std::cout << "wrote " << res.manifest.string() << ", " << res.final_manifest.string() << ", "
                << res.truth_manifest.string() << "\n";
    } else if (*label) {
      const auto res = run_label(manifest, final_manifest.empty() ? std::nullopt : std::optional<fs::path>(final_manifest),
                                 key, out, cfg);
      for (const auto& [name, frac] : res.irregular_fraction) {
        std::cout << name << " irregular " << detail::fmt("%.2f", 100.0 * frac) << "%\n";
      }
      std::cout << "labelled " << res.labelled << ", skipped " << res.skipped << "; wrote " << res.manifest.string() << "\n";
    } else if (*bench) {
      const auto res = run_bench(manifest, out, cfg);
      std::cout << "wrote " << res.records << " records to " << res.results.string() << "\n";
    } else if (*meta) {
      if (*train) {
        const auto res = run_meta_train(manifest, perf, out, cfg);
        std::cout << "wrote " << res.models.size() << " models; audit " << res.audit.string() << "\n";
      } else {
        const fs::path models_dir = models.empty() ? out / "models" : fs::path(models);
        const fs::path results_path = results.empty() ? out / "results.jsonl" : fs::path(results);
        const auto n = run_meta_apply(manifest, models_dir, results_path, *select ? MetaMode::select : MetaMode::mepe, cfg);
        std::cout << "appended " << n << " rows to " << results_path.string() << "\n";
      }
    } else if (*report) {
      const auto res = run_report(results, out, cfg, methods);
      std::cout << "N=" << res.ranks.n_datasets() << " excluded=" << res.ranks.excluded_rows
                << " CD=" << detail::fmt("%.4f", res.cd.critical_distance) << "; wrote " << res.report.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
