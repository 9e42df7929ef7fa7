#pragma once

// PCA detector: squared Mahalanobis distance of the standardized data within
// the eigenspace of non-negligible variance.

#include <cmath>
#include <vector>

#include "trialod/detectors/common.hpp"

namespace trialod::detectors {

/// Columns centred and divided by their sample standard deviation; constant columns become zero.
inline Matrix standardize(const Matrix& data) {
  const double denom = static_cast<double>(data.rows() - 1);
  Matrix z = data.rowwise() - data.colwise().mean();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / denom);
    if (sd > 0.0 && std::isfinite(sd)) {
      z.col(j) /= sd;
    } else {
      z.col(j).setZero();
    }
  }
  return z;
}

inline std::vector<double> pca_scores(const Matrix& data, double variance_floor) {
  require_rows(data, 2, "pca");
  if (!(variance_floor > 0.0)) throw Error(ErrorKind::usage, "pca variance floor must be positive");
  const Matrix z = standardize(data);
  const Matrix cov = (z.transpose() * z) / static_cast<double>(z.rows() - 1);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::detector_failure, "pca eigendecomposition failed");

  const Matrix projected = z * eig.eigenvectors();
  std::vector<double> scores(static_cast<std::size_t>(z.rows()), 0.0);
  for (Eigen::Index c = 0; c < projected.cols(); ++c) {
    const double lambda = eig.eigenvalues()(c);
    if (!(lambda > variance_floor)) continue;
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
      scores[static_cast<std::size_t>(i)] += projected(i, c) * projected(i, c) / lambda;
    }
  }
  return scores;
}

}  // namespace trialod::detectors
