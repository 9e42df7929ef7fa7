#pragma once

// Histogram-based outlier score with static equal-width bins.

#include <algorithm>
#include <cmath>
#include <vector>

#include "trialod/detectors/common.hpp"

namespace trialod::detectors {

inline constexpr double kHbosEpsilon = 1e-12;

/// Bin of value v in `bins` equal-width bins over [lo, hi]; hi lands in the last bin.
inline std::size_t hbos_bin(double v, double lo, double hi, int bins) {
  if (!(hi > lo)) return 0;
  const double width = (hi - lo) / bins;
  const auto b = static_cast<long long>(std::floor((v - lo) / width));
  return static_cast<std::size_t>(std::clamp<long long>(b, 0, bins - 1));
}

inline std::vector<double> hbos_scores(const Matrix& data, int bins) {
  require_rows(data, 1, "hbos");
  if (bins < 2) throw Error(ErrorKind::usage, "hbos needs at least 2 bins");
  const auto n = static_cast<std::size_t>(data.rows());
  std::vector<double> scores(n, 0.0);
  std::vector<std::size_t> bin_of(n);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double lo = data.col(j).minCoeff();
    const double hi = data.col(j).maxCoeff();
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      bin_of[i] = hbos_bin(data(static_cast<Eigen::Index>(i), j), lo, hi, bins);
      counts[bin_of[i]] += 1.0;
    }
    const double peak = *std::max_element(counts.begin(), counts.end());
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] += std::log(1.0 / (counts[bin_of[i]] / peak + kHbosEpsilon));
    }
  }
  return scores;
}

}  // namespace trialod::detectors
