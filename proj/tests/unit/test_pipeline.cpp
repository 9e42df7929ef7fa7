#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <set>
#include <sstream>

#include "../support/unit_helpers.hpp"
#include "trialod/pipeline.hpp"

using namespace trialod;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using unit::kind_of;
using unit::temp_dir;

namespace {

std::string slurp(const fs::path& p) { return csv::read_file(p.string()); }

SynthSpec small_spec(int trials, int datasets, std::uint64_t seed) {
  SynthSpec s;
  s.n_trials = trials;
  s.datasets_per_trial = datasets;
  s.n_range = {60, 90};
  s.d_range = {3, 5};
  s.seed = seed;
  return s;
}

RunConfig quiet(std::ostream* log = nullptr) {
  RunConfig cfg;
  cfg.seed = 5;
  cfg.id_column = kSynthIdColumn;
  cfg.log = log;
  return cfg;
}

// synth + label for a collection; returns the labelled manifest.
fs::path prepared(const fs::path& dir, int trials, int datasets, std::uint64_t seed) {
  const auto synth = write_synth(small_spec(trials, datasets, seed), dir);
  return run_label(synth.manifest, std::nullopt, kSynthIdColumn, dir, quiet()).manifest;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TRIALOD_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("bench writes one record per dataset and detector, reproducibly") {
  const fs::path dir = temp_dir("bench");
  const fs::path manifest = prepared(dir, 1, 2, 3);
  const auto a = run_bench(manifest, dir / "a", quiet());
  CHECK(a.records == 12);
  const auto rows = lines_of(slurp(a.results));
  REQUIRE(rows.size() == 12);
  std::set<std::string> methods;
  for (const auto& r : read_results(a.results)) methods.insert(r.method);
  CHECK(methods.size() == 6);

  RunConfig threaded = quiet();
  threaded.jobs = 3;
  const auto b = run_bench(manifest, dir / "b", threaded);
  CHECK(slurp(a.results) == slurp(b.results));
  CHECK(slurp(a.performance) == slurp(b.performance));
  CHECK(slurp(a.summary) == slurp(b.summary));

  const auto j = nlohmann::ordered_json::parse(lines_of(slurp(a.results)).front());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK((keys == std::vector<std::string>{"trial", "snapshot", "dataset_id", "method", "auroc", "ci_low", "ci_high", "aupr", "positive"}));
}

TEST_CASE("every result row references a manifest dataset") {
  const fs::path dir = temp_dir("refs");
  const fs::path manifest = prepared(dir, 2, 2, 4);
  RunConfig cfg = quiet();
  cfg.with_ensembles = true;
  const auto bench = run_bench(manifest, dir, cfg);
  std::set<std::string> known;
  for (const auto& e : read_manifest(manifest)) known.insert(provenance_key(e.provenance()));
  const auto records = read_results(bench.results);
  CHECK(records.size() == 4 * 8);
  for (const auto& r : records) {
    CHECK(known.count(provenance_key({r.trial, r.snapshot, r.dataset_id, {}})) == 1);
    CHECK(is_known_method(r.method));
  }
}

TEST_CASE("labelling identical snapshots yields no irregular rows") {
  const fs::path dir = temp_dir("label_same");
  const auto synth = write_synth(small_spec(1, 1, 6), dir);
  Manifest m = read_manifest(synth.manifest);
  REQUIRE(m.size() == 1);
  m[0].final_data = m[0].data;
  write_manifest(dir / "same.json", m);
  const auto res = run_label(dir / "same.json", std::nullopt, kSynthIdColumn, dir / "out", quiet());
  REQUIRE(res.irregular_fraction.size() == 1);
  CHECK(res.irregular_fraction[0].second == 0.0);
  const auto labelled = read_manifest(res.manifest);
  const auto labels = read_labels(labelled[0].labels->string());
  CHECK_FALSE(labels.empty());
  CHECK(std::all_of(labels.begin(), labels.end(), [](const auto& kv) { return kv.second == 0; }));
}

TEST_CASE("labelling skips datasets without a final table") {
  const fs::path dir = temp_dir("label_skip");
  const auto synth = write_synth(small_spec(1, 2, 7), dir);
  Manifest m = read_manifest(synth.manifest);
  m[1].final_data.reset();
  write_manifest(dir / "partial.json", m);
  std::ostringstream log;
  const auto res = run_label(dir / "partial.json", std::nullopt, kSynthIdColumn, dir / "out", quiet(&log));
  CHECK(res.labelled == 1);
  CHECK(res.skipped == 1);
  CHECK_THAT(log.str(), ContainsSubstring("skipped"));

  for (auto& e : m) e.final_data.reset();
  write_manifest(dir / "none.json", m);
  CHECK(kind_of([&] { run_label(dir / "none.json", std::nullopt, kSynthIdColumn, dir / "out2", quiet()); }) ==
        ErrorKind::usage);
}

TEST_CASE("labelling with a separate final manifest") {
  const fs::path dir = temp_dir("label_final");
  const auto synth = write_synth(small_spec(2, 2, 8), dir);
  const auto res = run_label(synth.manifest, synth.final_manifest, kSynthIdColumn, dir / "out", quiet());
  CHECK(res.labelled == 4);
  // labels agree with the planted truth
  const auto truth = read_manifest(synth.truth_manifest);
  const auto labelled = read_manifest(res.manifest);
  REQUIRE(truth.size() == labelled.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CHECK(slurp(*truth[i].labels) == slurp(*labelled[i].labels));
  }
}

TEST_CASE("meta training needs two trials") {
  const fs::path dir = temp_dir("meta_one");
  const fs::path manifest = prepared(dir, 1, 3, 9);
  const auto bench = run_bench(manifest, dir, quiet());
  CHECK(kind_of([&] { run_meta_train(manifest, bench.performance, dir, quiet()); }) == ErrorKind::usage);
}

TEST_CASE("leave-one-trial-out end to end") {
  const fs::path dir = temp_dir("meta_seven");
  const fs::path manifest = prepared(dir, 7, 2, 10);
  RunConfig cfg = quiet();
  cfg.with_ensembles = true;
  const auto bench = run_bench(manifest, dir, cfg);
  const auto train = run_meta_train(manifest, bench.performance, dir, cfg);
  CHECK(train.models.size() == 7);

  const auto audit = lines_of(slurp(train.audit));
  REQUIRE(audit.size() == 7);
  std::set<std::string> held;
  for (const auto& line : audit) {
    const auto j = nlohmann::json::parse(line);
    const auto trial = j.at("held_out_trial").get<std::string>();
    const auto used = j.at("trials_used").get<std::vector<std::string>>();
    held.insert(trial);
    CHECK(used.size() == 6);
    CHECK(std::find(used.begin(), used.end(), trial) == used.end());
    CHECK(j.at("training_rows").get<std::size_t>() == 12);
    const auto model = meta_model_from_json(nlohmann::json::parse(slurp(model_path(dir / "models", trial))));
    CHECK(model.trials_used == used);
  }
  CHECK(held.size() == 7);

  SECTION("mepe with k = 6 reproduces ensemble-p") {
    RunConfig six = cfg;
    six.k = 6;
    CHECK(run_meta_apply(manifest, dir / "models", bench.results, MetaMode::mepe, six) == 14);
    std::map<std::string, const ResultRecord*> ens;
    const auto records = read_results(bench.results);
    for (const auto& r : records) {
      if (r.method == "ensemble-p") ens[provenance_key({r.trial, r.snapshot, r.dataset_id, {}})] = &r;
    }
    std::size_t mepe_rows = 0;
    for (const auto& r : records) {
      if (r.method != "mepe") continue;
      ++mepe_rows;
      const auto* e = ens.at(provenance_key({r.trial, r.snapshot, r.dataset_id, {}}));
      CHECK(r.metrics.auroc == e->metrics.auroc);
      CHECK(r.metrics.aupr == e->metrics.aupr);
      CHECK(r.metrics.ci_low == e->metrics.ci_low);
      CHECK(r.metrics.ci_high == e->metrics.ci_high);
    }
    CHECK(mepe_rows == 14);
  }

  SECTION("selection rows replace earlier ones and the report is consistent") {
    CHECK(run_meta_apply(manifest, dir / "models", bench.results, MetaMode::select, cfg) == 14);
    CHECK(run_meta_apply(manifest, dir / "models", bench.results, MetaMode::select, cfg) == 14);
    const auto records = read_results(bench.results);
    CHECK(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.method == "metaod-r"; }) == 14);

    const auto rep = run_report(bench.results, dir / "report", cfg);
    const std::size_t k = rep.ranks.n_methods();
    CHECK(rep.ranks.n_datasets() == 14);
    CHECK_THAT(rep.cd.critical_distance, WithinAbs(nemenyi_cd(k, 14), 1e-12));
    const auto j = nlohmann::json::parse(slurp(rep.report));
    CHECK(j.at("cd").get<double>() == rep.cd.critical_distance);
    CHECK(j.at("methods").size() == k);
    CHECK(j.at("ci_method") == "delong");
    CHECK(j.at("ap_method") == "step");
    CHECK(fs::exists(rep.svg));
    CHECK(fs::exists(rep.text));
    CHECK(fs::exists(rep.tables));

    const auto six = run_report(bench.results, dir / "report6", cfg, {"iforest", "ecod", "knn", "lof", "pca", "hbos"});
    CHECK(six.ranks.n_methods() == 6);
    CHECK_THAT(six.cd.critical_distance, WithinAbs(nemenyi_cd(6, 14), 1e-12));
  }
}

TEST_CASE("report on two identical methods") {
  const fs::path dir = temp_dir("report_same");
  std::vector<ResultRecord> recs;
  for (int d = 0; d < 5; ++d) {
    MetricResult m;
    m.auroc = 0.6 + 0.05 * d;
    for (const char* method : {"iforest", "ecod"}) recs.push_back(make_record({"T1", 1, "d" + std::to_string(d), {}}, method, m));
  }
  csv::write_file((dir / "r.jsonl").string(), results_to_jsonl(recs));
  const auto rep = run_report(dir / "r.jsonl", dir, quiet());
  CHECK(rep.cd.friedman_p == 1.0);
  REQUIRE(rep.cd.cliques.size() == 1);
  CHECK(rep.cd.cliques[0].size() == 2);
}

TEST_CASE("report rejects insufficient coverage and lists gaps") {
  const fs::path dir = temp_dir("report_gaps");
  std::vector<ResultRecord> recs;
  MetricResult m;
  recs.push_back(make_record({"T1", 1, "a", {}}, "iforest", m));
  recs.push_back(make_record({"T1", 1, "b", {}}, "ecod", m));
  csv::write_file((dir / "r.jsonl").string(), results_to_jsonl(recs));
  try {
    run_report(dir / "r.jsonl", dir, quiet());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK_THAT(std::string(e.what()), ContainsSubstring("ecod missing on 1"));
  }
  recs.pop_back();
  csv::write_file((dir / "one.jsonl").string(), results_to_jsonl(recs));
  CHECK(kind_of([&] { run_report(dir / "one.jsonl", dir, quiet()); }) == ErrorKind::input);
}

TEST_CASE("results JSONL is sorted and rejects unknown methods") {
  MetricResult m;
  const std::string text = results_to_jsonl({make_record({"T2", 1, "a", {}}, "lof", m), make_record({"T1", 2, "b", {}}, "ecod", m),
                                             make_record({"T1", 1, "z", {}}, "mepe", m), make_record({"T1", 1, "z", {}}, "ecod", m)});
  const auto rows = lines_of(text);
  REQUIRE(rows.size() == 4);
  CHECK_THAT(rows[0], ContainsSubstring("\"z\",\"method\":\"ecod\""));
  CHECK_THAT(rows[1], ContainsSubstring("\"mepe\""));
  CHECK_THAT(rows[2], ContainsSubstring("\"snapshot\":2"));
  CHECK_THAT(rows[3], ContainsSubstring("\"T2\""));

  const fs::path dir = temp_dir("jsonl");
  csv::write_file((dir / "bad.jsonl").string(), "{\"trial\":\"T\",\"snapshot\":1,\"dataset_id\":\"a\",\"method\":\"svm\",\"auroc\":0.5}\n");
  CHECK(kind_of([&] { read_results(dir / "bad.jsonl"); }) == ErrorKind::parse);
}

TEST_CASE("run configuration validation") {
  RunConfig cfg;
  cfg.jobs = 0;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::usage);
  cfg = {};
  cfg.k = 7;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::usage);
  cfg = {};
  cfg.lambda = -1.0;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::usage);
  cfg = {};
  cfg.alpha = 1.5;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::usage);
  CHECK_NOTHROW(RunConfig{}.validate());
}

TEST_CASE("parallel_for visits every index and rethrows the first failure") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw Error(ErrorKind::input, "fail " + std::to_string(i));
    });
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK_THAT(std::string(e.what()), ContainsSubstring("fail 7"));
  }
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = temp_dir("cli");
  const fs::path log = dir / "log.txt";
  const std::string out = " --id-column __id --out " + dir.string();
  CHECK(run_cli("--seed 3" + out + " synth --trials 2 --datasets 1 --n-min 60 --n-max 70 --d-min 3 --d-max 3", log) == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(run_cli(out + " synth --kinds nonsense", log) == 2);
  CHECK_THAT(slurp(log), ContainsSubstring("nonsense"));
  CHECK(run_cli(out + " synth --contamination 0.9", log) == 2);
  CHECK(run_cli(out + " label --manifest " + (dir / "missing.json").string() + " --key __id", log) == 3);
  CHECK(run_cli(out + " label --manifest " + (dir / "manifest.json").string() + " --key __id", log) == 0);
  CHECK(run_cli(out + " bench --manifest " + (dir / "labeled_manifest.json").string(), log) == 0);
  CHECK(run_cli(out + " meta train --manifest " + (dir / "labeled_manifest.json").string() + " --perf " +
                    (dir / "performance.csv").string(), log) == 0);
  CHECK(run_cli("--k 9" + out + " meta mepe --manifest " + (dir / "labeled_manifest.json").string(), log) == 2);
  CHECK(run_cli(out + " report --results " + (dir / "results.jsonl").string(), log) == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(run_cli(out + " report --results " + (dir / "results.jsonl").string() + " --methods iforest", log) == 1);
  CHECK(run_cli("", log) != 0);
  CHECK(run_cli("bench", log) != 0);
}
