#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <set>

#include "../support/unit_helpers.hpp"
#include "trialod/dataset.hpp"
#include "trialod/detectors/knn.hpp"
#include "trialod/manifest.hpp"
#include "trialod/synth.hpp"

using namespace trialod;
using Catch::Matchers::ContainsSubstring;

using unit::kind_of;
using unit::temp_dir;

TEST_CASE("parse_csv reads missing cells and header order") {
  const RawTable t = parse_csv("a,b\n1,x\n2,\n");
  REQUIRE((t.column_names == std::vector<std::string>{"a", "b"}));
  REQUIRE(t.rows() == 2);
  CHECK(t.columns[1][0] == Cell{"x"});
  CHECK_FALSE(t.columns[1][1].has_value());
  CHECK((t.id_values == std::vector<std::string>{"0", "1"}));
}

TEST_CASE("blank lines are skipped") { CHECK(parse_csv("c\nx\n\ny\n").rows() == 2); }

TEST_CASE("parse_csv handles quoted fields") {
  const RawTable t = parse_csv("name,note\n\"a,b\",\"say \"\"hi\"\"\"\n");
  CHECK(t.columns[0][0] == Cell{"a,b"});
  CHECK(t.columns[1][0] == Cell{"say \"hi\""});
}

TEST_CASE("parse_csv errors") {
  SECTION("duplicate id") {
    CHECK(kind_of([] { parse_csv("__id,x\np1,1\np1,2\n", std::string("__id")); }) == ErrorKind::integrity);
  }
  SECTION("ragged row names the row") {
    try {
      parse_csv("a,b\n1,2\n3\n");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse);
      CHECK_THAT(e.what(), ContainsSubstring("row 2"));
    }
  }
  SECTION("missing id column") { CHECK(kind_of([] { parse_csv("a\n1\n", std::string("pid")); }) == ErrorKind::usage); }
  SECTION("empty file") {
    const auto dir = temp_dir("empty");
    csv::write_file((dir / "e.csv").string(), "");
    CHECK(kind_of([&] { load_csv((dir / "e.csv").string()); }) == ErrorKind::empty_input);
  }
}

TEST_CASE("id column is removed from data columns") {
  const RawTable t = parse_csv("x,__id,y\n1,p1,2\n3,p2,4\n", std::string("__id"));
  CHECK((t.column_names == std::vector<std::string>{"x", "y"}));
  CHECK((t.id_values == std::vector<std::string>{"p1", "p2"}));
}

TEST_CASE("numeric tables round-trip bit-exactly through CSV") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 3, d = 1 + static_cast<Eigen::Index>(rng() % 5);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double u = std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
      m.data()[i] = rep % 2 ? u : std::ldexp(u, static_cast<int>(rng() % 200) - 100);
    }
    const Dataset ds = Dataset::from_matrix(m);
    const Dataset back = encode_and_impute(parse_csv(to_csv(to_raw(ds, std::string("__id"))), std::string("__id")));
    REQUIRE(back.matrix.rows() == n);
    for (Eigen::Index i = 0; i < m.size(); ++i) REQUIRE(back.matrix.data()[i] == m.data()[i]);
    CHECK(back.ids == ds.ids);
  }
}

TEST_CASE("encode_and_impute examples") {
  SECTION("categorical mode imputation") {
    const Dataset ds2 = encode_and_impute(parse_csv("c,k\nx,1\ny,1\nx,1\n,1\n"));
    REQUIRE(ds2.n() == 4);
    CHECK(ds2.column_kinds[0] == ColumnKind::categorical);
    CHECK((ds2.categories[0] == std::vector<std::string>{"x", "y"}));
    CHECK(ds2.matrix(0, 0) == 0.0);
    CHECK(ds2.matrix(1, 0) == 1.0);
    CHECK(ds2.matrix(2, 0) == 0.0);
    CHECK(ds2.matrix(3, 0) == 0.0);
  }
  SECTION("numeric mode") {
    const Dataset ds = encode_and_impute(parse_csv("v,k\n1.0,a\n,a\n1.0,a\n3.0,a\n"));
    CHECK(ds.column_kinds[0] == ColumnKind::numeric);
    CHECK((ds.matrix.col(0).transpose() == Eigen::RowVector4d(1, 1, 1, 3)));
  }
  SECTION("tie goes to the smallest value") {
    const Dataset ds = encode_and_impute(parse_csv("v,k\n5.0,a\n7.0,a\n,a\n"));
    CHECK(ds.matrix(2, 0) == 5.0);
  }
  SECTION("all-missing column is dropped and noted") {
    const Dataset ds = encode_and_impute(parse_csv("a,b\n1,\n2,\n"));
    CHECK((ds.column_names == std::vector<std::string>{"a"}));
    REQUIRE(ds.provenance.notes.size() == 1);
    CHECK_THAT(ds.provenance.notes[0], ContainsSubstring("'b'"));
    CHECK(ds.missing_fraction == 0.5);
  }
  SECTION("every column all-missing") {
    CHECK(kind_of([] { encode_and_impute(parse_csv("a,b\n,\n,\n")); }) == ErrorKind::empty_output);
  }
}

TEST_CASE("encode_and_impute is idempotent and preserves n") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    std::string text = "a,b,c\n";
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      const auto cell = [&](bool numeric) -> std::string {
        if (rng() % 5 == 0) return "";
        return numeric ? std::to_string(static_cast<int>(rng() % 7)) : std::string(1, static_cast<char>('p' + rng() % 4));
      };
      text += cell(true) + "," + cell(false) + "," + cell(rng() % 2 == 0) + "\n";
    }
    // Guarantee at least one present value per column.
    text += "1,p,2\n";
    const Dataset once = encode_and_impute(parse_csv(text));
    const Dataset twice = encode_and_impute(to_raw(once));
    CHECK(once.n() == static_cast<std::size_t>(n + 1));
    CHECK(twice.matrix == once.matrix);
    CHECK(twice.column_names == once.column_names);
  }
}

namespace {

// Cell-by-cell comparator written directly from the labelling rule.
std::vector<int> brute_diff(const RawTable& a, const RawTable& b, const std::string& key) {
  const auto col = [](const RawTable& t, const std::string& name) {
    for (std::size_t j = 0; j < t.column_names.size(); ++j) {
      if (t.column_names[j] == name) return static_cast<int>(j);
    }
    return -1;
  };
  const auto norm = [](const Cell& c) { return c ? std::string(csv::trim(*c)) : std::string(); };
  const int ka = col(a, key), kb = col(b, key);
  std::vector<int> out;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    int match = -1;
    for (std::size_t r = 0; r < b.rows(); ++r) {
      if (norm(b.columns[static_cast<std::size_t>(kb)][r]) == norm(a.columns[static_cast<std::size_t>(ka)][i])) match = static_cast<int>(r);
    }
    if (match < 0) {
      out.push_back(1);
      continue;
    }
    int label = 0;
    for (std::size_t j = 0; j < a.column_names.size(); ++j) {
      const int jb = col(b, a.column_names[j]);
      if (static_cast<int>(j) == ka || jb < 0) continue;
      const std::string x = norm(a.columns[j][i]), y = norm(b.columns[static_cast<std::size_t>(jb)][static_cast<std::size_t>(match)]);
      if (x == y) continue;
      const auto nx = csv::parse_number(x), ny = csv::parse_number(y);
      if (nx && ny && *nx == *ny) continue;
      label = 1;
    }
    out.push_back(label);
  }
  return out;
}

}  // namespace

TEST_CASE("diff_labels examples") {
  const RawTable a = parse_csv("k,v,w\nk1,12,a\nk2,5,b\nk3, 5 ,c\n");
  SECTION("identical tables") { CHECK((diff_labels(a, a, "k") == std::vector<int>{0, 0, 0})); }
  SECTION("one cell changed") {
    const RawTable b = parse_csv("k,v,w\nk1,13,a\nk2,5,b\nk3,5,c\n");
    CHECK((diff_labels(a, b, "k") == std::vector<int>{1, 0, 0}));
  }
  SECTION("absent key and whitespace") {
    const RawTable b = parse_csv("k,v,w\nk1,12,a\nk3,5,c\n");
    CHECK((diff_labels(a, b, "k") == std::vector<int>{0, 1, 0}));
  }
  SECTION("numeric comparison and columns in one table only") {
    const RawTable b = parse_csv("k,v,extra\nk1,12.0,z\nk2,5e0,z\nk3,5,z\n");
    CHECK((diff_labels(a, b, "k") == std::vector<int>{0, 0, 0}));
  }
  SECTION("key may be the id column") {
    const RawTable ia = parse_csv("k,v\nk1,1\nk2,2\n", std::string("k"));
    const RawTable ib = parse_csv("k,v\nk2,3\nk1,1\n", std::string("k"));
    CHECK((diff_labels(ia, ib, "k") == std::vector<int>{0, 1}));
  }
  SECTION("missing key column") { CHECK(kind_of([&] { diff_labels(a, a, "nope"); }) == ErrorKind::usage); }
  SECTION("duplicate key") {
    const RawTable d = parse_csv("k,v\nk1,1\nk1,2\n");
    CHECK(kind_of([&] { diff_labels(d, a, "k"); }) == ErrorKind::integrity);
  }
}

TEST_CASE("diff_labels matches a brute-force comparator and is symmetric under cell edits") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng() % 25;
    std::string ta = "key,x,y,only_a\n", tb = "y,key,x,only_b\n";
    std::vector<std::string> rows_b;
    const bool drop_rows = rep % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string key = "id" + std::to_string(i);
      const std::string x = std::to_string(rng() % 4);
      const std::string y = rng() % 6 == 0 ? "" : std::string(1, static_cast<char>('a' + rng() % 3));
      ta += key + "," + x + "," + y + ",q\n";
      if (drop_rows && rng() % 8 == 0) continue;
      std::string bx = x, by = y;
      switch (rng() % 6) {
        case 0: bx = std::to_string(rng() % 4); break;
        case 1: bx = " " + x + ".0 "; break;
        case 2: by = std::string(1, static_cast<char>('a' + rng() % 3)); break;
        default: break;
      }
      rows_b.push_back(by + "," + key + "," + bx + ",r\n");
    }
    std::shuffle(rows_b.begin(), rows_b.end(), rng);
    for (const auto& r : rows_b) tb += r;
    const RawTable a = parse_csv(ta), b = parse_csv(tb);
    const auto labels = diff_labels(a, b, "key");
    REQUIRE(labels == brute_diff(a, b, "key"));
    if (!drop_rows) {
      // Same key set: the irregular keys agree in both directions.
      const auto back = diff_labels(b, a, "key");
      std::set<std::string> fwd, rev;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        if (labels[i]) fwd.insert(*a.columns[0][i]);
      }
      for (std::size_t i = 0; i < b.rows(); ++i) {
        if (back[i]) rev.insert(*b.columns[1][i]);
      }
      CHECK(fwd == rev);
    }
  }
}

TEST_CASE("labels files round-trip and attach by id") {
  const auto dir = temp_dir("labels");
  csv::write_file((dir / "l.csv").string(), labels_to_csv({"a", "b"}, {1, 0}));
  const auto by_id = read_labels((dir / "l.csv").string());
  CHECK(by_id.at("a") == 1);
  CHECK(by_id.at("b") == 0);
  Dataset ds = encode_and_impute(parse_csv("__id,v\nb,1\na,2\n", std::string("__id")));
  attach_labels(ds, by_id);
  CHECK((*ds.labels == std::vector<int>{0, 1}));
  csv::write_file((dir / "bad.csv").string(), "id,label\na,2\n");
  CHECK(kind_of([&] { read_labels((dir / "bad.csv").string()); }) == ErrorKind::parse);
}

TEST_CASE("manifest round-trips with relative paths") {
  const auto dir = temp_dir("manifest");
  Manifest m = {ManifestEntry{"t1", 0, "crf01", dir / "d" / "a.csv", dir / "f" / "a.csv", std::nullopt},
                ManifestEntry{"t2", 3, "crf02", dir / "d" / "b.csv", std::nullopt, dir / "l" / "b.csv"}};
  write_manifest(dir / "m.json", m);
  const std::string text = csv::read_file((dir / "m.json").string());
  CHECK_THAT(text, ContainsSubstring("\"d/a.csv\""));
  CHECK(text.find(dir.string()) == std::string::npos);
  const Manifest back = read_manifest(dir / "m.json");
  REQUIRE(back.size() == 2);
  CHECK(back[0].trial == "t1");
  CHECK(fs::weakly_canonical(back[0].data) == fs::weakly_canonical(m[0].data));
  CHECK_FALSE(back[0].labels.has_value());
  CHECK(back[1].snapshot == 3);
  CHECK(back[1].labels.has_value());
  csv::write_file((dir / "bad.json").string(), "{\"trial\": 1}");
  CHECK(kind_of([&] { read_manifest(dir / "bad.json"); }) == ErrorKind::parse);
}

TEST_CASE("synth_dataset plants exactly round(c*n) anomalies") {
  for (auto kind : {AnomalyKind::global, AnomalyKind::local_density, AnomalyKind::subspace, AnomalyKind::cluster}) {
    const auto sd = synth_dataset(100, 5, 0.1, kind, 3);
    CHECK(std::count(sd.data.labels->begin(), sd.data.labels->end(), 1) == 10);
    CHECK(sd.data.n() == 100);
    CHECK(sd.data.d() == 5);
    CHECK(sd.data.matrix.allFinite());
  }
  CHECK(planted_count(0.1, 333) == 33);
  CHECK(kind_of([] { synth_dataset(5, 2, 0.1, AnomalyKind::global, 1); }) == ErrorKind::spec);
}

TEST_CASE("synth_dataset anomalies differ from the corrected table only on planted rows") {
  const auto sd = synth_dataset(200, 6, 0.1, AnomalyKind::subspace, 12);
  for (std::size_t i = 0; i < sd.data.n(); ++i) {
    const bool same = sd.data.matrix.row(static_cast<Eigen::Index>(i)) == sd.corrected.row(static_cast<Eigen::Index>(i));
    CHECK(same == ((*sd.data.labels)[i] == 0));
  }
}

TEST_CASE("synth_generate is deterministic given the seed") {
  SynthSpec spec;
  spec.n_trials = 3;
  spec.datasets_per_trial = 2;
  spec.snapshots = 2;
  spec.seed = 99;
  const auto a = synth_generate(spec), b = synth_generate(spec);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].data.matrix == b[i].data.matrix);
    CHECK(a[i].data.provenance.trial == b[i].data.provenance.trial);
    const double prevalence = static_cast<double>(std::count(a[i].data.labels->begin(), a[i].data.labels->end(), 1)) /
                              static_cast<double>(a[i].data.n());
    CHECK(prevalence == static_cast<double>(planted_count(0.1, a[i].data.n())) / static_cast<double>(a[i].data.n()));
    CHECK(a[i].kind == spec.kind_of(std::stoi(a[i].data.provenance.trial.substr(5))));
  }
  spec.seed = 100;
  CHECK(synth_generate(spec)[0].data.matrix != a[0].data.matrix);
}

TEST_CASE("SynthSpec validation") {
  SynthSpec spec;
  spec.contamination = 0.5;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::spec);
  spec.contamination = 0.001;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::spec);
  spec.contamination = 0.1;
  spec.n_range = {10, 5};
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::spec);
}

TEST_CASE("global anomalies sit farther from their neighbours than the inlier median") {
  std::size_t above = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sd = synth_dataset(500, 2, 0.1, AnomalyKind::global, seed);
    oracle::Table t;
    for (Eigen::Index i = 0; i < sd.data.matrix.rows(); ++i) t.push_back({sd.data.matrix(i, 0), sd.data.matrix(i, 1)});
    const auto dist = oracle::knn(t, 5);
    std::vector<double> inlier;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if ((*sd.data.labels)[i] == 0) inlier.push_back(dist[i]);
    }
    std::nth_element(inlier.begin(), inlier.begin() + static_cast<std::ptrdiff_t>(inlier.size() / 2), inlier.end());
    const double median = inlier[inlier.size() / 2];
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if ((*sd.data.labels)[i] == 1) {
        above += dist[i] > median ? 1 : 0;
        ++total;
      }
    }
  }
  INFO(above << " of " << total);
  CHECK(static_cast<double>(above) >= 0.95 * static_cast<double>(total));
}
