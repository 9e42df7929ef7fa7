#pragma once

// Multi-dataset comparison: per-dataset ranks, Friedman test, Nemenyi
// critical distance and the cliques drawn on a critical-difference diagram.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "trialod/common.hpp"
#include "trialod/metrics.hpp"

namespace trialod {

/// Datasets (rows) x methods (columns) of a higher-is-better metric.
struct ScoreTable {
  std::vector<std::string> methods;
  std::vector<std::string> row_keys;
  std::vector<std::vector<std::optional<double>>> values;
};

struct RankTable {
  std::vector<std::string> methods;
  std::vector<std::string> row_keys;
  std::vector<std::vector<double>> ranks;  ///< rank 1 = best; ties share the mean rank
  std::vector<double> average_ranks;
  std::size_t excluded_rows = 0;           ///< rows dropped for a missing entry

  std::size_t n_datasets() const { return ranks.size(); }
  std::size_t n_methods() const { return methods.size(); }
};

/// Tie-averaged descending ranks of one row.
inline std::vector<double> rank_descending(const std::vector<double>& row) {
  std::vector<double> negated(row.size());
  std::transform(row.begin(), row.end(), negated.begin(), [](double v) { return -v; });
  return detail::midranks(negated);
}

inline RankTable rank_table(const ScoreTable& table) {
  RankTable out;
  out.methods = table.methods;
  const std::size_t k = table.methods.size();
  for (std::size_t r = 0; r < table.values.size(); ++r) {
    const auto& row = table.values[r];
    if (row.size() != k) throw Error(ErrorKind::integrity, "row width does not match method count");
    if (std::any_of(row.begin(), row.end(), [](const auto& v) { return !v.has_value(); })) {
      ++out.excluded_rows;
      continue;
    }
    std::vector<double> dense(k);
    for (std::size_t j = 0; j < k; ++j) dense[j] = *row[j];
    out.ranks.push_back(rank_descending(dense));
    out.row_keys.push_back(r < table.row_keys.size() ? table.row_keys[r] : std::to_string(r));
  }
  if (out.ranks.empty()) throw Error(ErrorKind::input, "no dataset has a complete set of method results");
  out.average_ranks.assign(k, 0.0);
  for (const auto& row : out.ranks) {
    for (std::size_t j = 0; j < k; ++j) out.average_ranks[j] += row[j];
  }
  for (double& r : out.average_ranks) r /= static_cast<double>(out.ranks.size());
  return out;
}

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Friedman chi-square on average ranks, with k-1 degrees of freedom.
inline FriedmanResult friedman(const RankTable& table) {
  const double N = static_cast<double>(table.n_datasets());
  const double k = static_cast<double>(table.n_methods());
  if (table.n_datasets() < 2 || table.n_methods() < 2) {
    throw Error(ErrorKind::input, "Friedman test needs at least 2 datasets and 2 methods");
  }
  double sum_sq = 0.0;
  for (double r : table.average_ranks) sum_sq += r * r;
  const double stat = std::max(0.0, 12.0 * N / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0));
  const double p = stat > 0.0 ? boost::math::gamma_q((k - 1.0) / 2.0, stat / 2.0) : 1.0;
  return {stat, p};
}

/// Studentized-range quantiles q_{0.05}(k, inf) / sqrt(2) for k = 2..10.
inline constexpr std::array<double, 9> kNemenyiQ05 = {1.960, 2.343, 2.569, 2.728, 2.850,
                                                      2.949, 3.031, 3.102, 3.164};
/// Same for alpha = 0.10.
inline constexpr std::array<double, 9> kNemenyiQ10 = {1.645, 2.052, 2.291, 2.459, 2.589,
                                                      2.693, 2.780, 2.855, 2.920};

inline double nemenyi_cd(std::size_t k, std::size_t n_datasets, double alpha = 0.05) {
  if (k < 2 || k > 10) throw Error(ErrorKind::usage, "Nemenyi table covers 2..10 methods, got " + std::to_string(k));
  if (n_datasets < 1) throw Error(ErrorKind::usage, "Nemenyi critical distance needs at least one dataset");
  double q = 0.0;
  if (alpha == 0.05) {
    q = kNemenyiQ05[k - 2];
  } else if (alpha == 0.10) {
    q = kNemenyiQ10[k - 2];
  } else {
    throw Error(ErrorKind::usage, "Nemenyi constants are tabulated for alpha 0.05 and 0.10 only");
  }
  const double kd = static_cast<double>(k);
  return q * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n_datasets)));
}

struct CDResult {
  double friedman_statistic = 0.0;
  double friedman_p = 1.0;
  double critical_distance = 0.0;
  double alpha = 0.05;
  /// Methods in ascending average-rank order.
  std::vector<std::size_t> order;
  /// Maximal runs of the rank order spanning less than the critical distance
  /// (two or more methods each), as method indices.
  std::vector<std::vector<std::size_t>> cliques;
};

inline std::vector<std::size_t> rank_order(const std::vector<double>& average_ranks) {
  std::vector<std::size_t> order(average_ranks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return average_ranks[a] < average_ranks[b]; });
  return order;
}

inline std::vector<std::vector<std::size_t>> cd_cliques(const std::vector<double>& average_ranks, double cd) {
  const auto order = rank_order(average_ranks);
  std::vector<std::vector<std::size_t>> cliques;
  std::size_t last_end = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::size_t j = i;
    while (j + 1 < order.size() && average_ranks[order[j + 1]] - average_ranks[order[i]] < cd) ++j;
    if (j > i && (cliques.empty() || j > last_end)) {
      cliques.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                           order.begin() + static_cast<std::ptrdiff_t>(j + 1));
      last_end = j;
    }
  }
  return cliques;
}

inline CDResult critical_difference(const RankTable& table, double alpha = 0.05) {
  CDResult out;
  const auto fr = friedman(table);
  out.friedman_statistic = fr.statistic;
  out.friedman_p = fr.p_value;
  out.alpha = alpha;
  out.critical_distance = nemenyi_cd(table.n_methods(), table.n_datasets(), alpha);
  out.order = rank_order(table.average_ranks);
  out.cliques = cd_cliques(table.average_ranks, out.critical_distance);
  return out;
}

/// Per-dataset "any method positive" flags, grouped by (trial, snapshot).
struct SuccessRecord {
  std::string trial;
  int snapshot = 0;
  std::string dataset_id;
  std::vector<bool> positive;  ///< one flag per detector
};

struct SuccessFractions {
  double overall = 0.0;
  std::size_t datasets = 0;
  std::map<std::pair<std::string, int>, double> per_trial_snapshot;
  std::map<std::string, double> per_trial;
};

inline SuccessFractions success_fraction(const std::vector<SuccessRecord>& records) {
  SuccessFractions out;
  std::map<std::pair<std::string, int>, std::pair<std::size_t, std::size_t>> groups;
  std::map<std::string, std::pair<std::size_t, std::size_t>> trials;
  std::size_t hits = 0;
  for (const auto& r : records) {
    const bool any = std::any_of(r.positive.begin(), r.positive.end(), [](bool b) { return b; });
    auto& g = groups[{r.trial, r.snapshot}];
    auto& t = trials[r.trial];
    ++g.second;
    ++t.second;
    if (any) {
      ++g.first;
      ++t.first;
      ++hits;
    }
  }
  out.datasets = records.size();
  out.overall = records.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(records.size());
  for (const auto& [key, c] : groups) {
    out.per_trial_snapshot[key] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  for (const auto& [key, c] : trials) out.per_trial[key] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

}  // namespace trialod
