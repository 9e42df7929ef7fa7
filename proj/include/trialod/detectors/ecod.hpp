#pragma once

// ECOD: per-feature empirical tail probabilities combined as a sum of
// negative log-probabilities, taking the worse of left tail, right tail and
// the skewness-selected tail.

#include <algorithm>
#include <cmath>
#include <vector>

#include "trialod/detectors/common.hpp"

namespace trialod::detectors {

/// Biased sample skewness m3 / m2^1.5; zero for constant input.
inline double sample_skewness(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double c = x - mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) return 0.0;
  const double s = m3 / std::pow(m2, 1.5);
  return std::isfinite(s) ? s : 0.0;
}

inline std::vector<double> ecod_scores(const Matrix& data) {
  require_rows(data, 2, "ecod");
  const auto n = static_cast<std::size_t>(data.rows());
  const double nd = static_cast<double>(n);
  std::vector<double> left(n, 0.0), right(n, 0.0), autos(n, 0.0);

  std::vector<double> column(n), sorted(n);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = data(static_cast<Eigen::Index>(i), j);
    sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const bool use_left = sample_skewness(column) < 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = column[i];
      // The instance itself counts toward both tails, so both are >= 1/n.
      const auto at_most = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
      const auto at_least = static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x));
      const double ll = -std::log(at_most / nd);
      const double lr = -std::log(at_least / nd);
      left[i] += ll;
      right[i] += lr;
      autos[i] += use_left ? ll : lr;
    }
  }
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = std::max({left[i], right[i], autos[i]});
  return scores;
}

}  // namespace trialod::detectors
