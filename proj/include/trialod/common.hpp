#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace trialod {

/// Dense instances x features matrix.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  parse,
  integrity,
  empty_input,
  empty_output,
  usage,
  spec,
  input,
  undefined_metric,
  training_set_empty,
  detector_failure,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::integrity: return "integrity error";
    case ErrorKind::empty_input: return "empty input";
    case ErrorKind::empty_output: return "empty output";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::spec: return "spec error";
    case ErrorKind::input: return "input error";
    case ErrorKind::undefined_metric: return "undefined metric";
    case ErrorKind::training_set_empty: return "training set empty";
    case ErrorKind::detector_failure: return "detector failure";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

/// Single exception type for the library; `kind()` distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// The six base detectors. Enumerator order is the canonical column order used
/// by performance matrices, rank tie-breaks and ensemble summation.
enum class DetectorKind : int { iforest = 0, ecod, knn, lof, pca, hbos };

inline constexpr std::size_t kNumDetectors = 6;

inline constexpr std::array<DetectorKind, kNumDetectors> kAllDetectors = {
    DetectorKind::iforest, DetectorKind::ecod, DetectorKind::knn,
    DetectorKind::lof,     DetectorKind::pca,  DetectorKind::hbos};

inline std::string_view to_string(DetectorKind kind) {
  constexpr std::array<std::string_view, kNumDetectors> names = {
      "iforest", "ecod", "knn", "lof", "pca", "hbos"};
  return names[static_cast<std::size_t>(kind)];
}

inline std::optional<DetectorKind> parse_detector(std::string_view name) {
  for (DetectorKind kind : kAllDetectors) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

inline std::size_t index_of(DetectorKind kind) { return static_cast<std::size_t>(kind); }

/// Where a dataset came from: trial, snapshot number and form/dataset name.
struct Provenance {
  std::string trial;
  int snapshot = 0;
  std::string dataset_id;
  std::vector<std::string> notes;

  bool same_source(const Provenance& other) const {
    return trial == other.trial && snapshot == other.snapshot && dataset_id == other.dataset_id;
  }
};

}  // namespace trialod
