#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trialod/common.hpp"
#include "trialod/csv.hpp"

namespace trialod {

namespace fs = std::filesystem;

/// One dataset in a collection. Paths are held resolved; on disk they are
/// stored relative to the manifest's directory.
struct ManifestEntry {
  std::string trial;
  int snapshot = 0;
  std::string dataset_id;
  fs::path data;
  std::optional<fs::path> final_data;
  std::optional<fs::path> labels;

  Provenance provenance() const { return {trial, snapshot, dataset_id, {}}; }
};

using Manifest = std::vector<ManifestEntry>;

inline Manifest read_manifest(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(csv::read_file(path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::parse, path.string() + ": manifest must be a JSON array");
  const fs::path base = path.parent_path();
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  Manifest out;
  for (const auto& item : doc) {
    try {
      ManifestEntry e;
      e.trial = item.at("trial").get<std::string>();
      e.snapshot = item.at("snapshot").get<int>();
      e.dataset_id = item.at("dataset_id").get<std::string>();
      e.data = resolve(item.at("data").get<std::string>());
      if (item.contains("final") && !item["final"].is_null()) e.final_data = resolve(item["final"].get<std::string>());
      if (item.contains("labels") && !item["labels"].is_null()) e.labels = resolve(item["labels"].get<std::string>());
      if (e.snapshot < 0) throw Error(ErrorKind::parse, "negative snapshot");
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
  }
  return out;
}

inline void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = fs::weakly_canonical(fs::absolute(path).parent_path());
  const auto rel = [&](const fs::path& p) {
    return fs::weakly_canonical(fs::absolute(p)).lexically_relative(base).generic_string();
  };
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : manifest) {
    nlohmann::json item = {{"trial", e.trial}, {"snapshot", e.snapshot}, {"dataset_id", e.dataset_id},
                           {"data", rel(e.data)}};
    if (e.final_data) item["final"] = rel(*e.final_data);
    if (e.labels) item["labels"] = rel(*e.labels);
    doc.push_back(std::move(item));
  }
  csv::write_file(path.string(), doc.dump(2) + "\n");
}

}  // namespace trialod
