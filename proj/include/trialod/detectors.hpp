#pragma once

// Uniform entry point for the six base detectors.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trialod/common.hpp"
#include "trialod/dataset.hpp"
#include "trialod/detectors/ecod.hpp"
#include "trialod/detectors/hbos.hpp"
#include "trialod/detectors/iforest.hpp"
#include "trialod/detectors/knn.hpp"
#include "trialod/detectors/lof.hpp"
#include "trialod/detectors/pca.hpp"

namespace trialod {

/// Hyperparameters for every detector kind; defaults follow the usual PyOD defaults.
struct DetectorParams {
  int iforest_trees = 100;
  int iforest_subsample = 256;
  int knn_k = 5;
  int lof_k = 20;
  int hbos_bins = 10;
  double pca_variance_floor = 1e-9;

  void validate() const {
    if (iforest_trees < 1) throw Error(ErrorKind::usage, "iforest trees must be >= 1");
    if (iforest_subsample < 2) throw Error(ErrorKind::usage, "iforest subsample must be >= 2");
    if (knn_k < 1 || lof_k < 1) throw Error(ErrorKind::usage, "neighbour counts must be >= 1");
    if (hbos_bins < 2) throw Error(ErrorKind::usage, "hbos bins must be >= 2");
    if (!(pca_variance_floor > 0.0)) throw Error(ErrorKind::usage, "pca variance floor must be positive");
  }
};

struct DetectorSpec {
  DetectorKind kind = DetectorKind::iforest;
  DetectorParams params;
  std::uint64_t seed = 0;  // iforest only
};

/// Per-instance anomaly scores; higher is more anomalous.
struct ScoreVector {
  std::vector<double> scores;
  /// Method name from the closed vocabulary (detector names, ensemble-n, ensemble-p, metaod-r, mepe).
  std::string method;
  /// Set when the scores come from a single base detector.
  std::optional<DetectorKind> detector;
  Provenance provenance;

  std::size_t size() const { return scores.size(); }
};

inline std::vector<double> detector_scores(const Matrix& x, const DetectorSpec& spec) {
  spec.params.validate();
  switch (spec.kind) {
    case DetectorKind::iforest:
      return detectors::iforest_scores(x, {spec.params.iforest_trees, spec.params.iforest_subsample}, spec.seed);
    case DetectorKind::ecod: return detectors::ecod_scores(x);
    case DetectorKind::knn: return detectors::knn_scores(x, spec.params.knn_k);
    case DetectorKind::lof: return detectors::lof_scores(x, spec.params.lof_k);
    case DetectorKind::pca: return detectors::pca_scores(x, spec.params.pca_variance_floor);
    case DetectorKind::hbos: return detectors::hbos_scores(x, spec.params.hbos_bins);
  }
  throw Error(ErrorKind::usage, "unknown detector kind");
}

inline ScoreVector score(const Dataset& data, const DetectorSpec& spec) {
  ScoreVector out;
  out.scores = detector_scores(data.matrix, spec);
  for (double s : out.scores) {
    if (!std::isfinite(s)) throw Error(ErrorKind::detector_failure, std::string(to_string(spec.kind)) + " produced a non-finite score");
  }
  out.method = std::string(to_string(spec.kind));
  out.detector = spec.kind;
  out.provenance = data.provenance;
  return out;
}

inline ScoreVector score(const Dataset& data, DetectorKind kind, std::uint64_t seed, const DetectorParams& params = {}) {
  return score(data, DetectorSpec{kind, params, seed});
}

}  // namespace trialod
