#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "trialod/common.hpp"

namespace trialod::detectors {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Euclidean distance between rows a and b, summed in feature order.
inline double row_distance(const RowMatrix& x, Eigen::Index a, Eigen::Index b) {
  const double* pa = x.data() + a * x.cols();
  const double* pb = x.data() + b * x.cols();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double diff = pa[j] - pb[j];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

inline void require_rows(const Matrix& x, Eigen::Index min_rows, const char* who) {
  if (x.rows() < min_rows) {
    throw Error(ErrorKind::input, std::string(who) + " needs at least " + std::to_string(min_rows) + " instances");
  }
  if (x.cols() < 1) throw Error(ErrorKind::input, std::string(who) + " needs at least one feature");
}

}  // namespace trialod::detectors
