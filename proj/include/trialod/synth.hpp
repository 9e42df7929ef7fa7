#pragma once

// Synthetic trial-like collections with planted irregularities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "trialod/common.hpp"
#include "trialod/dataset.hpp"
#include "trialod/random.hpp"

namespace trialod {

enum class AnomalyKind { global, local_density, subspace, cluster };

inline std::string_view to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::global: return "global";
    case AnomalyKind::local_density: return "local-density";
    case AnomalyKind::subspace: return "subspace";
    case AnomalyKind::cluster: return "cluster";
  }
  return "global";
}

inline std::optional<AnomalyKind> parse_anomaly_kind(std::string_view name) {
  for (auto kind : {AnomalyKind::global, AnomalyKind::local_density, AnomalyKind::subspace, AnomalyKind::cluster}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SynthSpec {
  int n_trials = 7;
  int datasets_per_trial = 4;
  int snapshots = 1;
  IntRange n_range{200, 600};
  IntRange d_range{4, 12};
  double contamination = 0.1;
  /// Anomaly kind per trial; cycled when shorter than n_trials.
  std::vector<AnomalyKind> kinds{AnomalyKind::global, AnomalyKind::local_density, AnomalyKind::subspace,
                                 AnomalyKind::cluster};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trials < 1 || datasets_per_trial < 1 || snapshots < 1) {
      throw Error(ErrorKind::spec, "trial, dataset and snapshot counts must be positive");
    }
    if (n_range.lo < 1 || n_range.lo > n_range.hi) throw Error(ErrorKind::spec, "empty n range");
    if (d_range.lo < 1 || d_range.lo > d_range.hi) throw Error(ErrorKind::spec, "empty d range");
    if (!(contamination > 0.0 && contamination < 0.5)) {
      throw Error(ErrorKind::spec, "contamination must lie strictly inside (0, 0.5)");
    }
    if (kinds.empty()) throw Error(ErrorKind::spec, "at least one anomaly kind is required");
    if (contamination * n_range.lo < 1.0) {
      throw Error(ErrorKind::spec, "contamination x n < 1 for the smallest dataset; no anomaly can be planted");
    }
  }

  AnomalyKind kind_of(int trial) const { return kinds[static_cast<std::size_t>(trial) % kinds.size()]; }
};

inline std::string synth_trial_name(int t) { return "trial" + std::to_string(t); }

inline std::string synth_dataset_name(int j) {
  std::string s = std::to_string(j);
  return "crf" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

/// Number of planted anomalies for a dataset of n rows.
inline std::size_t planted_count(double contamination, std::size_t n) {
  return static_cast<std::size_t>(std::llround(contamination * static_cast<double>(n)));
}

struct SynthDataset {
  Dataset data;             ///< Preliminary data; labels mark planted anomalies.
  Matrix corrected;         ///< Same rows with every anomaly replaced by its clean value.
  AnomalyKind kind = AnomalyKind::global;
};

namespace detail {

struct GaussianMixture {
  std::vector<Vector> means;
  std::vector<Matrix> factors;  // covariance = L L^T
  std::vector<double> cumulative_weights;

  std::size_t pick(Engine& rng) const {
    const double u = uniform01(rng);
    for (std::size_t c = 0; c + 1 < cumulative_weights.size(); ++c) {
      if (u < cumulative_weights[c]) return c;
    }
    return cumulative_weights.size() - 1;
  }

  Vector draw(Engine& rng, std::size_t c, double scale = 1.0) const {
    Vector z(means[c].size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = standard_normal(rng);
    return means[c] + scale * (factors[c] * z);
  }
};

inline GaussianMixture random_mixture(Engine& rng, std::size_t d) {
  GaussianMixture gm;
  const std::size_t components = 1 + uniform_index(rng, 3);
  std::vector<double> weights;
  for (std::size_t c = 0; c < components; ++c) {
    Vector mean(static_cast<Eigen::Index>(d));
    for (auto& v : mean) v = uniform(rng, -6.0, 6.0);
    Matrix factor = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < factor.rows(); ++i) {
      factor(i, i) = uniform(rng, 0.5, 1.5);
      for (Eigen::Index j = 0; j < i; ++j) factor(i, j) = 0.3 * standard_normal(rng);
    }
    gm.means.push_back(std::move(mean));
    gm.factors.push_back(std::move(factor));
    weights.push_back(uniform(rng, 0.5, 1.5));
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (double w : weights) {
    acc += w / total;
    gm.cumulative_weights.push_back(acc);
  }
  return gm;
}

}  // namespace detail

/// One synthetic dataset: Gaussian-mixture inliers plus round(contamination * n)
/// anomalies of the requested kind at random row positions.
inline SynthDataset synth_dataset(std::size_t n, std::size_t d, double contamination, AnomalyKind kind,
                                  std::uint64_t seed, Provenance prov = {}) {
  const std::size_t n_anom = planted_count(contamination, n);
  if (contamination * static_cast<double>(n) < 1.0 || n_anom >= n) throw Error(ErrorKind::spec, "infeasible anomaly count for n=" + std::to_string(n));
  Engine rng(seed);
  const auto gm = detail::random_mixture(rng, d);
  const auto N = static_cast<Eigen::Index>(n);
  const auto D = static_cast<Eigen::Index>(d);

  Matrix clean(N, D);
  std::vector<std::size_t> component(n);
  for (std::size_t i = 0; i < n; ++i) {
    component[i] = gm.pick(rng);
    clean.row(static_cast<Eigen::Index>(i)) = gm.draw(rng, component[i]).transpose();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> anomalous(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_anom));
  std::sort(anomalous.begin(), anomalous.end());

  const Vector lo = clean.colwise().minCoeff().transpose();
  const Vector hi = clean.colwise().maxCoeff().transpose();
  const Vector mid = 0.5 * (lo + hi);
  const Vector half = 0.5 * (hi - lo);

  Matrix data = clean;
  switch (kind) {
    case AnomalyKind::global: {
      for (std::size_t i : anomalous) {
        for (Eigen::Index j = 0; j < D; ++j) {
          data(static_cast<Eigen::Index>(i), j) = uniform(rng, mid(j) - 2.0 * half(j), mid(j) + 2.0 * half(j));
        }
      }
      break;
    }
    case AnomalyKind::local_density: {
      for (std::size_t i : anomalous) {
        data.row(static_cast<Eigen::Index>(i)) = gm.draw(rng, component[i], std::sqrt(5.0)).transpose();
      }
      break;
    }
    case AnomalyKind::subspace: {
      const std::size_t width = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(d))));
      std::vector<std::size_t> features(d);
      for (std::size_t i : anomalous) {
        std::iota(features.begin(), features.end(), std::size_t{0});
        std::shuffle(features.begin(), features.end(), rng);
        for (std::size_t f = 0; f < width; ++f) {
          const auto j = static_cast<Eigen::Index>(features[f]);
          data(static_cast<Eigen::Index>(i), j) = uniform(rng, mid(j) - 1.5 * half(j), mid(j) + 1.5 * half(j));
        }
      }
      break;
    }
    case AnomalyKind::cluster: {
      const Vector center = clean.colwise().mean().transpose();
      double radius = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) radius = std::max(radius, (clean.row(i).transpose() - center).norm());
      Vector direction(D);
      for (auto& v : direction) v = standard_normal(rng);
      direction.normalize();
      const Vector blob = center + 1.2 * radius * direction;
      const double spread = 0.05 * half.mean();
      for (std::size_t i : anomalous) {
        for (Eigen::Index j = 0; j < D; ++j) {
          data(static_cast<Eigen::Index>(i), j) = blob(j) + spread * standard_normal(rng);
        }
      }
      break;
    }
  }

  SynthDataset out;
  out.kind = kind;
  out.data = Dataset::from_matrix(std::move(data), std::move(prov));
  std::vector<int> labels(n, 0);
  for (std::size_t i : anomalous) labels[i] = 1;
  out.data.labels = std::move(labels);
  out.corrected = std::move(clean);
  return out;
}

/// Deterministic collection: n_trials x snapshots x datasets_per_trial datasets.
inline std::vector<SynthDataset> synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<SynthDataset> out;
  for (int t = 0; t < spec.n_trials; ++t) {
    const std::string trial = synth_trial_name(t);
    for (int s = 0; s < spec.snapshots; ++s) {
      for (int j = 0; j < spec.datasets_per_trial; ++j) {
        const std::string id = synth_dataset_name(j);
        const std::uint64_t seed = dataset_seed(spec.seed, trial, id + "/" + std::to_string(s));
        Engine shape_rng(mix64(seed));
        const auto n = static_cast<std::size_t>(
            spec.n_range.lo + static_cast<int>(uniform_index(shape_rng, static_cast<std::size_t>(spec.n_range.hi - spec.n_range.lo + 1))));
        const auto d = static_cast<std::size_t>(
            spec.d_range.lo + static_cast<int>(uniform_index(shape_rng, static_cast<std::size_t>(spec.d_range.hi - spec.d_range.lo + 1))));
        auto ds = synth_dataset(n, d, spec.contamination, spec.kind_of(t), seed, Provenance{trial, s, id, {}});
        // Row ids are unique across snapshots of the same form.
        for (std::size_t i = 0; i < ds.data.n(); ++i) ds.data.ids[i] = "s" + std::to_string(s) + "r" + std::to_string(i);
        out.push_back(std::move(ds));
      }
    }
  }
  return out;
}

}  // namespace trialod
