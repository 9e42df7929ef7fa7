#pragma once

#include <algorithm>
#include <vector>

#include "trialod/detectors/common.hpp"

namespace trialod::detectors {

/// Distance from each instance to its k-th nearest other instance (k clamped to n-1).
inline std::vector<double> knn_scores(const Matrix& data, int k) {
  require_rows(data, 2, "knn");
  if (k < 1) throw Error(ErrorKind::usage, "knn needs k >= 1");
  const RowMatrix x = data;
  const Eigen::Index n = x.rows();
  const auto kk = static_cast<std::size_t>(std::min<Eigen::Index>(k, n - 1));

  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dist.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) dist.push_back(row_distance(x, i, j));
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1), dist.end());
    scores[static_cast<std::size_t>(i)] = dist[kk - 1];
  }
  return scores;
}

}  // namespace trialod::detectors
