#pragma once

// Label-free dataset descriptors used to predict detector performance.
//
// Catalog (1-based positions, all population statistics):
//   1-7    n, d, ln(1+n), ln(1+d), d/n, missing-cell fraction before
//          imputation, categorical column fraction
//   8-23   {min, max, mean, std} across columns of each per-column
//          {mean, std, skewness, excess kurtosis}
//   24-26  mean, max, std of |Pearson r| over column pairs
//   27-29  explained variance of PC1, of PCs 1-3, participation ratio / d
//   30     fraction of cells with |z| > 3
//   31-32  mean, max per-column Tukey-fence outlier fraction
//   33-34  mean, max normalized entropy of 10-bin histograms
//   35-37  mean, min, max per-column distinct-value fraction

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string_view>
#include <vector>

#include "trialod/dataset.hpp"
#include "trialod/detectors/hbos.hpp"

namespace trialod {

inline constexpr std::size_t kNumMetaFeatures = 37;
inline constexpr int kMetaCatalogVersion = 1;

inline constexpr std::array<std::string_view, kNumMetaFeatures> kMetaFeatureNames = {
    "n", "d", "log1p_n", "log1p_d", "d_over_n", "missing_fraction", "categorical_fraction",
    "col_mean_min", "col_mean_max", "col_mean_mean", "col_mean_std",
    "col_std_min", "col_std_max", "col_std_mean", "col_std_std",
    "col_skew_min", "col_skew_max", "col_skew_mean", "col_skew_std",
    "col_kurt_min", "col_kurt_max", "col_kurt_mean", "col_kurt_std",
    "abs_corr_mean", "abs_corr_max", "abs_corr_std",
    "pc1_variance_ratio", "pc3_variance_ratio", "participation_ratio",
    "z3_cell_fraction", "iqr_outlier_mean", "iqr_outlier_max",
    "entropy_mean", "entropy_max",
    "distinct_mean", "distinct_min", "distinct_max"};

struct MetaFeatureVector {
  std::array<double, kNumMetaFeatures> values{};
  Provenance provenance;
};

namespace detail {

struct Summary {
  double min = 0.0, max = 0.0, mean = 0.0, std = 0.0;
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace detail

inline MetaFeatureVector extract_meta_features(const Dataset& data) {
  MetaFeatureVector out;
  out.provenance = data.provenance;
  auto& f = out.values;
  const Matrix& x = data.matrix;
  const auto n = static_cast<double>(x.rows());
  const auto d = static_cast<double>(x.cols());
  const Eigen::Index cols = x.cols();

  f[0] = n;
  f[1] = d;
  f[2] = std::log1p(n);
  f[3] = std::log1p(d);
  f[4] = d / n;
  f[5] = data.missing_fraction;
  f[6] = static_cast<double>(std::count(data.column_kinds.begin(), data.column_kinds.end(), ColumnKind::categorical)) /
         std::max(1.0, static_cast<double>(data.column_kinds.size()));

  std::vector<double> means, stds, skews, kurts;
  Matrix z(x.rows(), cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double mean = x.col(j).mean();
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double c = x(i, j) - mean;
      m2 += c * c;
      m3 += c * c * c;
      m4 += c * c * c * c;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double sd = std::sqrt(m2);
    means.push_back(mean);
    stds.push_back(sd);
    skews.push_back(m2 > 0.0 ? detail::finite_or_zero(m3 / std::pow(m2, 1.5)) : 0.0);
    kurts.push_back(m2 > 0.0 ? detail::finite_or_zero(m4 / (m2 * m2) - 3.0) : 0.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) z(i, j) = sd > 0.0 ? (x(i, j) - mean) / sd : 0.0;
  }
  std::size_t slot = 7;
  for (const auto* stat : {&means, &stds, &skews, &kurts}) {
    const auto s = detail::summarize(*stat);
    f[slot++] = s.min;
    f[slot++] = s.max;
    f[slot++] = s.mean;
    f[slot++] = s.std;
  }

  // Correlation matrix of the standardized columns (constant columns correlate 0).
  const Matrix corr = (z.transpose() * z) / n;
  std::vector<double> abs_corr;
  for (Eigen::Index a = 0; a < cols; ++a) {
    for (Eigen::Index b = a + 1; b < cols; ++b) abs_corr.push_back(std::min(1.0, std::abs(corr(a, b))));
  }
  const auto cs = detail::summarize(abs_corr);
  f[23] = cs.mean;
  f[24] = cs.max;
  f[25] = cs.std;

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(corr, Eigen::EigenvaluesOnly);
  std::vector<double> lambda(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  for (double& l : lambda) l = std::max(0.0, l);
  std::sort(lambda.rbegin(), lambda.rend());
  double total = 0.0, total_sq = 0.0;
  for (double l : lambda) {
    total += l;
    total_sq += l * l;
  }
  if (total > 0.0) {
    f[26] = lambda[0] / total;
    double top3 = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, lambda.size()); ++i) top3 += lambda[i];
    f[27] = top3 / total;
    f[28] = total * total / total_sq / d;
  }

  std::size_t extreme = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) extreme += std::abs(z.data()[i]) > 3.0 ? 1 : 0;
  f[29] = static_cast<double>(extreme) / (n * d);

  std::vector<double> iqr_frac, entropy, distinct;
  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, j);
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const double q1 = detail::quantile_sorted(sorted, 0.25);
    const double q3 = detail::quantile_sorted(sorted, 0.75);
    const double lo = q1 - 1.5 * (q3 - q1);
    const double hi = q3 + 1.5 * (q3 - q1);
    const auto outside = std::count_if(column.begin(), column.end(), [&](double v) { return v < lo || v > hi; });
    iqr_frac.push_back(static_cast<double>(outside) / n);

    std::array<double, 10> counts{};
    for (double v : column) counts[detectors::hbos_bin(v, sorted.front(), sorted.back(), 10)] += 1.0;
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    }
    entropy.push_back(h / std::log(10.0));

    const auto unique_end = std::unique(sorted.begin(), sorted.end());
    distinct.push_back(static_cast<double>(unique_end - sorted.begin()) / n);
  }
  const auto iq = detail::summarize(iqr_frac);
  f[30] = iq.mean;
  f[31] = iq.max;
  const auto en = detail::summarize(entropy);
  f[32] = en.mean;
  f[33] = en.max;
  const auto di = detail::summarize(distinct);
  f[34] = di.mean;
  f[35] = di.min;
  f[36] = di.max;

  for (double& v : f) v = detail::finite_or_zero(v);
  return out;
}

}  // namespace trialod
