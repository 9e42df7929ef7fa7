#pragma once

// Score aggregation across detectors: raw mean (Ensemble-N) and mean of
// min-max scaled scores (Ensemble-P).

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "trialod/detectors.hpp"

namespace trialod {

struct EnsembleInput {
  std::vector<ScoreVector> members;
  /// Non-negative, one per member; uniform when empty.
  std::vector<double> weights;
};

/// Affine map onto [0, 1]; a constant vector maps to 0.5 everywhere.
inline ScoreVector minmax_scale(const ScoreVector& in) {
  if (in.scores.empty()) throw Error(ErrorKind::input, "cannot scale an empty score vector");
  const auto [lo_it, hi_it] = std::minmax_element(in.scores.begin(), in.scores.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  ScoreVector out = in;
  for (double& s : out.scores) s = range > 0.0 ? (s - lo) / range : 0.5;
  return out;
}

namespace detail {

/// Members ordered by detector column order (non-detector members last, by name)
/// so the summation order, and hence every bit of the result, does not depend
/// on the order the caller listed them in.
inline std::vector<std::size_t> canonical_order(const EnsembleInput& in) {
  std::vector<std::size_t> order(in.members.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto key = [&](std::size_t m) {
    const auto& sv = in.members[m];
    return std::make_pair(sv.detector ? static_cast<int>(*sv.detector) : 1000, sv.method);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return order;
}

inline void validate(const EnsembleInput& in) {
  if (in.members.empty()) throw Error(ErrorKind::input, "ensemble needs at least one member");
  const std::size_t n = in.members.front().size();
  for (const auto& m : in.members) {
    if (m.size() != n) throw Error(ErrorKind::integrity, "ensemble members have different lengths");
    if (!m.provenance.same_source(in.members.front().provenance)) {
      throw Error(ErrorKind::integrity, "ensemble members come from different datasets");
    }
  }
  if (!in.weights.empty()) {
    if (in.weights.size() != in.members.size()) throw Error(ErrorKind::integrity, "one weight per member required");
    double total = 0.0;
    for (double w : in.weights) {
      if (!(w >= 0.0)) throw Error(ErrorKind::input, "weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::input, "weights sum to zero");
  }
}

inline ScoreVector weighted_mean(const EnsembleInput& in, const std::vector<ScoreVector>& members, std::string method) {
  const std::size_t n = members.front().size();
  ScoreVector out;
  out.method = std::move(method);
  out.provenance = members.front().provenance;
  out.scores.assign(n, 0.0);
  double total_weight = 0.0;
  for (std::size_t m : canonical_order(in)) {
    const double w = in.weights.empty() ? 1.0 : in.weights[m];
    total_weight += w;
    for (std::size_t i = 0; i < n; ++i) out.scores[i] += w * members[m].scores[i];
  }
  for (double& s : out.scores) s /= total_weight;
  return out;
}

}  // namespace detail

inline ScoreVector ensemble_naive(const EnsembleInput& in) {
  detail::validate(in);
  return detail::weighted_mean(in, in.members, "ensemble-n");
}

inline ScoreVector ensemble_prob(const EnsembleInput& in) {
  detail::validate(in);
  std::vector<ScoreVector> scaled;
  scaled.reserve(in.members.size());
  for (const auto& m : in.members) scaled.push_back(minmax_scale(m));
  return detail::weighted_mean(in, scaled, "ensemble-p");
}

}  // namespace trialod
