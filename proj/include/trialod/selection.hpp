#pragma once

// Meta-learned selection (top-1 detector) and the meta-learned probabilistic
// ensemble (min-max average of the top-k predicted detectors).

#include <functional>
#include <string>
#include <vector>

#include "trialod/detectors.hpp"
#include "trialod/ensemble.hpp"
#include "trialod/metamodel.hpp"

namespace trialod {

/// Runs one detector on a dataset. Replaceable so callers can reuse cached
/// scores or inject failures.
using DetectorRunner = std::function<ScoreVector(const Dataset&, DetectorKind, std::uint64_t seed)>;

inline DetectorRunner default_runner(const DetectorParams& params = {}) {
  return [params](const Dataset& data, DetectorKind kind, std::uint64_t seed) {
    return score(data, DetectorSpec{kind, params, seed});
  };
}

struct MePEConfig {
  int k = 3;

  void validate() const {
    if (k < 1 || k > static_cast<int>(kNumDetectors)) {
      throw Error(ErrorKind::usage, "MePE k must lie in [1, " + std::to_string(kNumDetectors) + "]");
    }
  }
};

/// Scores from the best-predicted detector; on failure falls through to the next one.
inline ScoreVector select_metaod_r(const MetaModel& model, const MetaFeatureVector& meta, const Dataset& data,
                                   std::uint64_t seed, const DetectorRunner& run = default_runner(),
                                   std::vector<std::string>* warnings = nullptr) {
  const auto ranked = predict_ranks(model, meta);
  for (DetectorKind kind : ranked.order) {
    try {
      ScoreVector out = run(data, kind, seed);
      out.method = "metaod-r";
      return out;
    } catch (const Error& e) {
      if (warnings) warnings->push_back(std::string(to_string(kind)) + " failed: " + e.what());
    }
  }
  throw Error(ErrorKind::detector_failure, "every detector failed on " + data.provenance.dataset_id);
}

/// Ensemble-P over the top-k predicted detectors. Failed members are dropped;
/// a single surviving member is returned unscaled, so k = 1 reproduces
/// select_metaod_r exactly.
inline ScoreVector mepe_score(const MetaModel& model, const MetaFeatureVector& meta, const Dataset& data,
                              const MePEConfig& cfg, std::uint64_t seed, const DetectorRunner& run = default_runner(),
                              std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  const auto ranked = predict_ranks(model, meta);
  EnsembleInput input;
  for (int i = 0; i < cfg.k; ++i) {
    const DetectorKind kind = ranked.order[static_cast<std::size_t>(i)];
    try {
      input.members.push_back(run(data, kind, seed));
    } catch (const Error& e) {
      if (warnings) warnings->push_back(std::string(to_string(kind)) + " failed: " + e.what());
    }
  }
  if (input.members.empty()) {
    throw Error(ErrorKind::detector_failure, "every MePE member failed on " + data.provenance.dataset_id);
  }
  ScoreVector out = input.members.size() == 1 ? input.members.front() : ensemble_prob(input);
  out.method = "mepe";
  out.detector.reset();
  return out;
}

}  // namespace trialod
