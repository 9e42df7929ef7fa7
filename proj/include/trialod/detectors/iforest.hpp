#pragma once

// Isolation forest: random axis-parallel partitioning; anomalies isolate in
// fewer splits, so shorter average path length means a higher score.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "trialod/detectors/common.hpp"
#include "trialod/random.hpp"

namespace trialod::detectors {

inline constexpr double kEulerGamma = 0.5772156649;

/// Average unsuccessful-search path length in a BST of m nodes (harmonic
/// number approximated by ln + Euler's constant).
inline double average_path_length(std::size_t m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  const double md = static_cast<double>(m);
  return 2.0 * (std::log(md - 1.0) + kEulerGamma) - 2.0 * (md - 1.0) / md;
}

struct IForestParams {
  int n_trees = 100;
  int subsample = 256;
};

class IsolationTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0;
  };

  /// Grows a tree on the given rows. The rng draw sequence depends only on the
  /// set of rows (not their order), so relabelling instances leaves the tree intact.
  static IsolationTree build(const RowMatrix& x, std::span<const std::size_t> rows, Engine& rng, int height_limit) {
    IsolationTree tree;
    std::vector<std::size_t> work(rows.begin(), rows.end());
    tree.grow(x, work, 0, rng, height_limit);
    return tree;
  }

  double path_length(const double* point) const {
    int node = 0;
    int depth = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const Node& nd = nodes_[static_cast<std::size_t>(node)];
      node = point[nd.feature] < nd.threshold ? nd.left : nd.right;
      ++depth;
    }
    return static_cast<double>(depth) + average_path_length(nodes_[static_cast<std::size_t>(node)].size);
  }

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  int grow(const RowMatrix& x, std::vector<std::size_t>& rows, int depth, Engine& rng, int height_limit) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{-1, 0.0, -1, -1, rows.size()});
    if (depth >= height_limit || rows.size() <= 1) return index;

    const Eigen::Index d = x.cols();
    std::vector<double> lo(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
    std::vector<double> hi(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());
    for (std::size_t r : rows) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double v = x(static_cast<Eigen::Index>(r), j);
        lo[static_cast<std::size_t>(j)] = std::min(lo[static_cast<std::size_t>(j)], v);
        hi[static_cast<std::size_t>(j)] = std::max(hi[static_cast<std::size_t>(j)], v);
      }
    }
    std::vector<int> candidates;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (lo[static_cast<std::size_t>(j)] < hi[static_cast<std::size_t>(j)]) candidates.push_back(static_cast<int>(j));
    }
    if (candidates.empty()) return index;

    const int feature = candidates[uniform_index(rng, candidates.size())];
    const double a = lo[static_cast<std::size_t>(feature)];
    const double b = hi[static_cast<std::size_t>(feature)];
    double threshold = uniform(rng, a, b);
    while (!(threshold > a)) threshold = uniform(rng, a, b);

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x(static_cast<Eigen::Index>(r), feature) < threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(x, left, depth + 1, rng, height_limit);
    const int r = grow(x, right, depth + 1, rng, height_limit);
    Node& nd = nodes_[static_cast<std::size_t>(index)];
    nd.feature = feature;
    nd.threshold = threshold;
    nd.left = l;
    nd.right = r;
    return index;
  }

  std::vector<Node> nodes_;
};

/// Uniform subsample without replacement (partial Fisher-Yates).
inline std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t size, Engine& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  idx.resize(size);
  return idx;
}

inline int height_limit_for(std::size_t sample_size) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(sample_size))));
}

/// Scores in (0, 1]; tree t draws from its own stream derive_seed(seed, t).
inline std::vector<double> iforest_scores(const Matrix& data, const IForestParams& params, std::uint64_t seed) {
  require_rows(data, 2, "iforest");
  if (params.n_trees < 1 || params.subsample < 2) throw Error(ErrorKind::usage, "iforest needs T >= 1 and psi >= 2");
  const RowMatrix x = data;
  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t psi = std::min(static_cast<std::size_t>(params.subsample), n);
  const int limit = height_limit_for(psi);

  std::vector<double> total(n, 0.0);
  for (int t = 0; t < params.n_trees; ++t) {
    Engine rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const auto rows = subsample_rows(n, psi, rng);
    const auto tree = IsolationTree::build(x, rows, rng, limit);
    for (std::size_t i = 0; i < n; ++i) total[i] += tree.path_length(x.data() + static_cast<Eigen::Index>(i) * x.cols());
  }
  const double norm = average_path_length(psi);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = std::exp2(-(total[i] / static_cast<double>(params.n_trees)) / norm);
  }
  return scores;
}

}  // namespace trialod::detectors
