#pragma once

// Ranking metrics for anomaly scores against binary irregularity labels.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "trialod/common.hpp"

namespace trialod {

struct MetricResult {
  double auroc = 0.5;
  double ci_low = 0.5;
  double ci_high = 0.5;
  double aupr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  /// Lower CI bound strictly above chance.
  bool positive_performance = false;
};

namespace detail {

inline void check_labels(std::span<const double> scores, std::span<const int> labels, std::size_t& n_pos,
                         std::size_t& n_neg) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::integrity, "scores and labels differ in length");
  n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorKind::input, "labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(l);
  }
  n_neg = labels.size() - n_pos;
}

/// 1-based ranks, ascending by value; tied values share their mean rank.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    const double mid = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t t = start; t < end; ++t) ranks[order[t]] = mid;
    start = end;
  }
  return ranks;
}

}  // namespace detail

/// Probability that a random irregular instance outscores a random regular one
/// (ties count one half), via the Mann-Whitney rank sum.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos = 0, n_neg = 0;
  detail::check_labels(scores, labels, n_pos, n_neg);
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::undefined_metric, "AUROC needs both classes");
  const auto ranks = detail::midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

inline constexpr double kZ975 = 1.959964;

inline double two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::usage, "confidence level must lie in (0, 1)");
  if (level == 0.95) return kZ975;
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// DeLong confidence interval for the AUROC, clamped to [0, 1].
inline Interval auroc_ci(std::span<const double> scores, std::span<const int> labels, double level = 0.95) {
  std::size_t n_pos = 0, n_neg = 0;
  detail::check_labels(scores, labels, n_pos, n_neg);
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::undefined_metric, "AUROC needs both classes");

  std::vector<double> pos, neg;
  pos.reserve(n_pos);
  neg.reserve(n_neg);
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);

  const auto all_ranks = detail::midranks(scores);
  const auto pos_ranks = detail::midranks(pos);
  const auto neg_ranks = detail::midranks(neg);
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);

  // Structural components: V10 per positive, V01 per negative.
  std::vector<double> v10, v01;
  v10.reserve(n_pos);
  v01.reserve(n_neg);
  std::size_t ip = 0, in = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      v10.push_back((all_ranks[i] - pos_ranks[ip++]) / nn);
    } else {
      v01.push_back(1.0 - (all_ranks[i] - neg_ranks[in++]) / np);
    }
  }
  const double auc = std::accumulate(v10.begin(), v10.end(), 0.0) / np;
  const auto sample_var = [auc](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - auc) * (x - auc);
    return ss / static_cast<double>(v.size() - 1);
  };
  const double var = sample_var(v10) / np + sample_var(v01) / nn;
  const double point = auroc(scores, labels);
  if (!(var > 0.0)) return {point, point};
  const double half = two_sided_z(level) * std::sqrt(var);
  return {std::clamp(point - half, 0.0, 1.0), std::clamp(point + half, 0.0, 1.0)};
}

/// Step-wise average precision; tied scores enter as one block.
inline double aupr(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos = 0, n_neg = 0;
  detail::check_labels(scores, labels, n_pos, n_neg);
  if (n_pos == 0) throw Error(ErrorKind::undefined_metric, "average precision needs a positive instance");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0, recall_prev = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      tp += static_cast<std::size_t>(labels[order[end]]);
      ++end;
    }
    seen = end;
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    start = end;
  }
  return ap;
}

inline MetricResult evaluate(std::span<const double> scores, std::span<const int> labels, double level = 0.95) {
  MetricResult r;
  detail::check_labels(scores, labels, r.n_pos, r.n_neg);
  r.auroc = auroc(scores, labels);
  const auto ci = auroc_ci(scores, labels, level);
  r.ci_low = std::min(ci.low, r.auroc);
  r.ci_high = std::max(ci.high, r.auroc);
  r.aupr = aupr(scores, labels);
  r.positive_performance = r.ci_low > 0.5;
  return r;
}

}  // namespace trialod
