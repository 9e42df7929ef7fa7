#pragma once

// Meta-learned performance predictor: min-max scaling (clipped to [0, 1]),
// a PCA reduction of the meta-features, and one ridge head per detector that
// maps the reduced representation to an expected AUROC.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "trialod/csv.hpp"
#include "trialod/metafeatures.hpp"
#include "trialod/ranking.hpp"

namespace trialod {

struct PerformanceRow {
  Provenance provenance;
  std::array<std::optional<double>, kNumDetectors> auroc;
};

/// Datasets x detectors AUROC matrix; columns in kAllDetectors order.
struct PerformanceMatrix {
  std::vector<PerformanceRow> rows;

  ScoreTable as_score_table() const {
    ScoreTable t;
    for (auto kind : kAllDetectors) t.methods.emplace_back(to_string(kind));
    for (const auto& r : rows) {
      t.row_keys.push_back(r.provenance.trial + "/" + std::to_string(r.provenance.snapshot) + "/" +
                           r.provenance.dataset_id);
      t.values.emplace_back(r.auroc.begin(), r.auroc.end());
    }
    return t;
  }
};

/// Long format: trial,snapshot,dataset_id,detector,auroc (empty auroc = missing).
inline std::string performance_to_csv(const PerformanceMatrix& perf) {
  std::string out;
  csv::append_row(out, {"trial", "snapshot", "dataset_id", "detector", "auroc"});
  for (const auto& r : perf.rows) {
    for (auto kind : kAllDetectors) {
      const auto& v = r.auroc[index_of(kind)];
      csv::append_row(out, {r.provenance.trial, std::to_string(r.provenance.snapshot), r.provenance.dataset_id,
                            std::string(to_string(kind)), v ? csv::format_number(*v) : std::string()});
    }
  }
  return out;
}

inline PerformanceMatrix performance_from_csv(std::string_view text) {
  const auto doc = csv::parse(text);
  const csv::Row expected = {"trial", "snapshot", "dataset_id", "detector", "auroc"};
  if (doc.header != expected) throw Error(ErrorKind::parse, "performance CSV must have columns " "trial,snapshot,dataset_id,detector,auroc");
  PerformanceMatrix perf;
  std::map<std::tuple<std::string, int, std::string>, std::size_t> index;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const auto where = "performance CSV row " + std::to_string(r + 1);
    if (row.size() != 5) throw Error(ErrorKind::parse, where + " is ragged");
    const auto snapshot = csv::parse_number(row[1]);
    const auto kind = parse_detector(csv::trim(row[3]));
    if (!snapshot || *snapshot < 0 || *snapshot != std::floor(*snapshot)) throw Error(ErrorKind::parse, where + ": bad snapshot");
    if (!kind) throw Error(ErrorKind::parse, where + ": unknown detector '" + row[3] + "'");
    const auto key = std::make_tuple(row[0], static_cast<int>(*snapshot), row[2]);
    auto [it, inserted] = index.emplace(key, perf.rows.size());
    if (inserted) perf.rows.push_back(PerformanceRow{Provenance{row[0], static_cast<int>(*snapshot), row[2], {}}, {}});
    auto& cell = perf.rows[it->second].auroc[index_of(*kind)];
    if (!csv::trim(row[4]).empty()) {
      const auto v = csv::parse_number(row[4]);
      if (!v || *v < 0.0 || *v > 1.0) throw Error(ErrorKind::parse, where + ": AUROC must lie in [0, 1]");
      cell = *v;
    }
  }
  return perf;
}

struct MetaModel {
  int catalog_version = kMetaCatalogVersion;
  std::vector<double> scaler_min;
  std::vector<double> scaler_max;
  std::vector<double> pca_mean;
  std::vector<std::vector<double>> components;  ///< p rows of kNumMetaFeatures
  std::vector<std::vector<double>> coef;        ///< kNumDetectors rows of p
  std::vector<double> intercept;                ///< kNumDetectors
  // Audit record for leave-one-trial-out hygiene.
  std::string held_out_trial;
  std::vector<std::string> trials_used;
  std::size_t training_rows = 0;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  std::size_t n_components() const { return components.size(); }

  /// Min-max scaled features, clipped to [0, 1]; constant training features map to 0.
  std::vector<double> scale(const MetaFeatureVector& meta) const {
    std::vector<double> s(kNumMetaFeatures, 0.0);
    for (std::size_t f = 0; f < kNumMetaFeatures; ++f) {
      const double range = scaler_max[f] - scaler_min[f];
      s[f] = range > 0.0 ? std::clamp((meta.values[f] - scaler_min[f]) / range, 0.0, 1.0) : 0.0;
    }
    return s;
  }

  std::vector<double> reduce(const std::vector<double>& scaled) const {
    std::vector<double> z(components.size(), 0.0);
    for (std::size_t c = 0; c < components.size(); ++c) {
      for (std::size_t f = 0; f < kNumMetaFeatures; ++f) z[c] += components[c][f] * (scaled[f] - pca_mean[f]);
    }
    return z;
  }

  /// Predicted AUROC per detector, in kAllDetectors order.
  std::array<double, kNumDetectors> predict(const MetaFeatureVector& meta) const {
    const auto z = reduce(scale(meta));
    std::array<double, kNumDetectors> out{};
    for (std::size_t k = 0; k < kNumDetectors; ++k) {
      out[k] = intercept[k];
      for (std::size_t c = 0; c < z.size(); ++c) out[k] += coef[k][c] * z[c];
    }
    return out;
  }
};

struct MetaFitOptions {
  double lambda = 1.0;
  std::size_t max_components = 8;
  std::uint64_t seed = 0;
};

/// Fits on every row whose trial differs from `held_out_trial`.
inline MetaModel fit_meta_model(const PerformanceMatrix& perf, const std::vector<MetaFeatureVector>& metas,
                                const std::string& held_out_trial, const MetaFitOptions& options = {}) {
  if (perf.rows.size() != metas.size()) throw Error(ErrorKind::integrity, "performance rows and meta-features differ in count");
  if (!(options.lambda > 0.0)) throw Error(ErrorKind::usage, "ridge penalty must be positive");
  if (options.max_components > kNumMetaFeatures) throw Error(ErrorKind::usage, "too many components");
  std::set<std::string> all_trials;
  for (std::size_t r = 0; r < perf.rows.size(); ++r) {
    if (!perf.rows[r].provenance.same_source(metas[r].provenance)) {
      throw Error(ErrorKind::integrity, "performance row " + std::to_string(r) + " and its meta-features describe different datasets");
    }
    all_trials.insert(perf.rows[r].provenance.trial);
  }

  std::vector<std::size_t> train;
  std::set<std::string> used;
  for (std::size_t r = 0; r < perf.rows.size(); ++r) {
    if (perf.rows[r].provenance.trial == held_out_trial) continue;
    train.push_back(r);
    used.insert(perf.rows[r].provenance.trial);
  }
  if (train.empty()) throw Error(ErrorKind::training_set_empty, "no rows outside held-out trial '" + held_out_trial + "'");
  if (all_trials.size() < 2) throw Error(ErrorKind::usage, "leave-one-trial-out needs at least two trials");

  MetaModel model;
  model.held_out_trial = held_out_trial;
  model.trials_used.assign(used.begin(), used.end());
  model.training_rows = train.size();
  model.lambda = options.lambda;
  model.seed = options.seed;

  model.scaler_min.assign(kNumMetaFeatures, std::numeric_limits<double>::infinity());
  model.scaler_max.assign(kNumMetaFeatures, -std::numeric_limits<double>::infinity());
  for (std::size_t r : train) {
    for (std::size_t f = 0; f < kNumMetaFeatures; ++f) {
      model.scaler_min[f] = std::min(model.scaler_min[f], metas[r].values[f]);
      model.scaler_max[f] = std::max(model.scaler_max[f], metas[r].values[f]);
    }
  }

  const auto m = static_cast<Eigen::Index>(train.size());
  const auto F = static_cast<Eigen::Index>(kNumMetaFeatures);
  Matrix scaled(m, F);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto s = model.scale(metas[train[static_cast<std::size_t>(i)]]);
    for (Eigen::Index f = 0; f < F; ++f) scaled(i, f) = s[static_cast<std::size_t>(f)];
  }
  const Vector mean = scaled.colwise().mean().transpose();
  model.pca_mean.assign(mean.data(), mean.data() + mean.size());

  if (m >= 2) {
    const Matrix centered = scaled.rowwise() - mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(m - 1);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector& values = eig.eigenvalues();  // ascending
    const double top = values(F - 1);
    std::size_t rank = 0;
    for (Eigen::Index c = 0; c < F && top > 0.0; ++c) {
      if (values(c) > 1e-10 * top) ++rank;
    }
    const std::size_t p = std::min(options.max_components, rank);
    for (std::size_t c = 0; c < p; ++c) {
      Vector v = eig.eigenvectors().col(F - 1 - static_cast<Eigen::Index>(c));
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0.0) v = -v;  // sign convention
      model.components.emplace_back(v.data(), v.data() + v.size());
    }
  }

  const std::size_t p = model.n_components();
  std::vector<std::vector<double>> reduced;
  reduced.reserve(train.size());
  for (std::size_t r : train) reduced.push_back(model.reduce(model.scale(metas[r])));

  model.coef.assign(kNumDetectors, std::vector<double>(p, 0.0));
  model.intercept.assign(kNumDetectors, 0.5);
  for (std::size_t k = 0; k < kNumDetectors; ++k) {
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < train.size(); ++t) {
      if (perf.rows[train[t]].auroc[k]) rows.push_back(t);
    }
    if (rows.empty()) continue;  // no signal: predict chance
    const auto nr = static_cast<Eigen::Index>(rows.size());
    const auto P = static_cast<Eigen::Index>(p);
    Matrix Z(nr, P);
    Vector y(nr);
    for (Eigen::Index i = 0; i < nr; ++i) {
      const std::size_t t = rows[static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < P; ++c) Z(i, c) = reduced[t][static_cast<std::size_t>(c)];
      y(i) = *perf.rows[train[t]].auroc[k];
    }
    const double y_mean = y.mean();
    if (P == 0) {
      model.intercept[k] = y_mean;
      continue;
    }
    const Vector z_mean = Z.colwise().mean().transpose();
    const Matrix Zc = Z.rowwise() - z_mean.transpose();
    const Vector yc = y.array() - y_mean;
    const Matrix gram = Zc.transpose() * Zc + options.lambda * Matrix::Identity(P, P);
    const Vector beta = gram.ldlt().solve(Zc.transpose() * yc);
    model.coef[k].assign(beta.data(), beta.data() + beta.size());
    model.intercept[k] = y_mean - z_mean.dot(beta);
  }
  return model;
}

struct RankedDetectors {
  std::array<DetectorKind, kNumDetectors> order;
  std::array<double, kNumDetectors> predicted;  ///< indexed by detector column
};

/// Detectors by predicted AUROC, best first; ties keep column order.
inline RankedDetectors predict_ranks(const MetaModel& model, const MetaFeatureVector& meta) {
  RankedDetectors out;
  out.predicted = model.predict(meta);
  out.order = kAllDetectors;
  std::stable_sort(out.order.begin(), out.order.end(), [&](DetectorKind a, DetectorKind b) {
    return out.predicted[index_of(a)] > out.predicted[index_of(b)];
  });
  return out;
}

inline nlohmann::json to_json(const MetaModel& m) {
  nlohmann::json detectors = nlohmann::json::array();
  for (auto kind : kAllDetectors) detectors.push_back(std::string(to_string(kind)));
  return {
      {"catalog_version", m.catalog_version},
      {"held_out_trial", m.held_out_trial},
      {"scaler", {{"min", m.scaler_min}, {"max", m.scaler_max}}},
      {"pca", {{"mean", m.pca_mean}, {"components", m.components}}},
      {"ridge", {{"detectors", detectors}, {"coef", m.coef}, {"intercept", m.intercept}}},
      {"trials_used", m.trials_used},
      {"training_rows", m.training_rows},
      {"lambda", m.lambda},
      {"seed", m.seed},
  };
}

inline MetaModel meta_model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("catalog_version")) throw Error(ErrorKind::parse, "meta model lacks catalog_version");
  MetaModel m;
  try {
    m.catalog_version = j.at("catalog_version").get<int>();
    if (m.catalog_version != kMetaCatalogVersion) {
      throw Error(ErrorKind::parse, "unsupported meta-feature catalog version " + std::to_string(m.catalog_version));
    }
    m.held_out_trial = j.value("held_out_trial", "");
    m.scaler_min = j.at("scaler").at("min").get<std::vector<double>>();
    m.scaler_max = j.at("scaler").at("max").get<std::vector<double>>();
    m.pca_mean = j.at("pca").at("mean").get<std::vector<double>>();
    m.components = j.at("pca").at("components").get<std::vector<std::vector<double>>>();
    m.coef = j.at("ridge").at("coef").get<std::vector<std::vector<double>>>();
    m.intercept = j.at("ridge").at("intercept").get<std::vector<double>>();
    m.trials_used = j.at("trials_used").get<std::vector<std::string>>();
    m.training_rows = j.value("training_rows", std::size_t{0});
    m.lambda = j.at("lambda").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed meta model: ") + e.what());
  }
  const bool shapes_ok =
      m.scaler_min.size() == kNumMetaFeatures && m.scaler_max.size() == kNumMetaFeatures &&
      m.pca_mean.size() == kNumMetaFeatures && m.coef.size() == kNumDetectors && m.intercept.size() == kNumDetectors &&
      std::all_of(m.components.begin(), m.components.end(), [](const auto& c) { return c.size() == kNumMetaFeatures; }) &&
      std::all_of(m.coef.begin(), m.coef.end(), [&](const auto& c) { return c.size() == m.components.size(); });
  if (!shapes_ok) throw Error(ErrorKind::parse, "meta model arrays have inconsistent shapes");
  return m;
}

}  // namespace trialod
