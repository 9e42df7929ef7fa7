#pragma once

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <functional>
#include <string>

#include "oracles.hpp"
#include "trialod/common.hpp"

namespace unit {

inline trialod::ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const trialod::Error& e) {
    return e.kind();
  }
  FAIL("expected trialod::Error");
  return trialod::ErrorKind::io;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("trialod_unit_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline trialod::Matrix to_matrix(const oracle::Table& t) {
  trialod::Matrix m(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(t.empty() ? 0 : t[0].size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i][j];
  }
  return m;
}

inline oracle::Table to_table(const trialod::Matrix& m) {
  oracle::Table t(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return t;
}

}  // namespace unit
