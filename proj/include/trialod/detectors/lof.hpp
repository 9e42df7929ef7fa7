#pragma once

// Local outlier factor with tie-inclusive k-distance neighbourhoods.

#include <algorithm>
#include <vector>

#include "trialod/detectors/common.hpp"

namespace trialod::detectors {

/// Floor on the reachability-distance sum; keeps lrd finite for duplicate clusters.
inline constexpr double kLofReachFloor = 1e-12;

struct Neighbourhood {
  double k_distance = 0.0;
  std::vector<Eigen::Index> members;   // ascending instance index
  std::vector<double> distances;       // aligned with members
};

/// k-distance neighbourhoods: every other instance within the k-th smallest distance.
inline std::vector<Neighbourhood> k_neighbourhoods(const RowMatrix& x, std::size_t k) {
  const Eigen::Index n = x.rows();
  std::vector<Neighbourhood> out(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n));
  std::vector<double> scratch;
  for (Eigen::Index i = 0; i < n; ++i) {
    scratch.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      row[static_cast<std::size_t>(j)] = j == i ? 0.0 : row_distance(x, i, j);
      if (j != i) scratch.push_back(row[static_cast<std::size_t>(j)]);
    }
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
    auto& nb = out[static_cast<std::size_t>(i)];
    nb.k_distance = scratch[k - 1];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && row[static_cast<std::size_t>(j)] <= nb.k_distance) {
        nb.members.push_back(j);
        nb.distances.push_back(row[static_cast<std::size_t>(j)]);
      }
    }
  }
  return out;
}

inline std::vector<double> lof_scores(const Matrix& data, int k) {
  require_rows(data, 2, "lof");
  if (k < 1) throw Error(ErrorKind::usage, "lof needs k >= 1");
  const RowMatrix x = data;
  const Eigen::Index n = x.rows();
  const auto kk = static_cast<std::size_t>(std::min<Eigen::Index>(k, n - 1));
  const auto hoods = k_neighbourhoods(x, kk);

  std::vector<double> lrd(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < hoods.size(); ++a) {
    const auto& nb = hoods[a];
    double reach = 0.0;
    for (std::size_t m = 0; m < nb.members.size(); ++m) {
      reach += std::max(hoods[static_cast<std::size_t>(nb.members[m])].k_distance, nb.distances[m]);
    }
    lrd[a] = static_cast<double>(nb.members.size()) / std::max(reach, kLofReachFloor);
  }

  std::vector<double> scores(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < hoods.size(); ++a) {
    const auto& nb = hoods[a];
    double sum = 0.0;
    for (Eigen::Index b : nb.members) sum += lrd[static_cast<std::size_t>(b)] / lrd[a];
    scores[a] = sum / static_cast<double>(nb.members.size());
  }
  return scores;
}

}  // namespace trialod::detectors
