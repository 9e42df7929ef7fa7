#pragma once

// Tabular ingestion: CSV -> RawTable -> encoded, imputed Dataset, plus
// snapshot-diff irregularity labels.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trialod/common.hpp"
#include "trialod/csv.hpp"

namespace trialod {

using Cell = std::optional<std::string>;

struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<Cell>> columns;
  /// One identifier per row. Row indices rendered as text when no id column was named.
  std::vector<std::string> id_values;
  /// Name of the column the ids were taken from, if any.
  std::optional<std::string> id_column;

  std::size_t rows() const { return id_values.size(); }

  /// Throws integrity error when columns are ragged or ids repeat.
  void validate() const {
    if (column_names.size() != columns.size()) {
      throw Error(ErrorKind::integrity, "column name count does not match column count");
    }
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != id_values.size()) {
        throw Error(ErrorKind::integrity, "column '" + column_names[j] + "' has " +
                                              std::to_string(columns[j].size()) + " cells, expected " +
                                              std::to_string(id_values.size()));
      }
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : id_values) {
      if (!seen.insert(id).second) throw Error(ErrorKind::integrity, "duplicate id '" + id + "'");
    }
  }
};

enum class ColumnKind { numeric, categorical };

struct Dataset {
  Matrix matrix;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  /// Lexicographically sorted category text per column (empty for numeric columns).
  std::vector<std::vector<std::string>> categories;
  std::vector<std::string> ids;
  std::optional<std::vector<int>> labels;
  Provenance provenance;
  /// Fraction of raw cells that were missing before imputation.
  double missing_fraction = 0.0;

  std::size_t n() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(matrix.cols()); }

  /// Convenience constructor for in-memory data (all numeric, row-index ids).
  static Dataset from_matrix(Matrix m, Provenance prov = {}) {
    Dataset ds;
    const auto d = static_cast<std::size_t>(m.cols());
    for (std::size_t j = 0; j < d; ++j) ds.column_names.push_back("x" + std::to_string(j));
    ds.column_kinds.assign(d, ColumnKind::numeric);
    ds.categories.assign(d, {});
    for (Eigen::Index i = 0; i < m.rows(); ++i) ds.ids.push_back(std::to_string(i));
    ds.matrix = std::move(m);
    ds.provenance = std::move(prov);
    return ds;
  }
};

inline RawTable parse_csv(std::string_view text, const std::optional<std::string>& id_column = std::nullopt) {
  const csv::Document doc = csv::parse(text);
  if (doc.header.empty()) throw Error(ErrorKind::empty_input, "no header row");

  std::optional<std::size_t> id_index;
  if (id_column) {
    const auto it = std::find(doc.header.begin(), doc.header.end(), *id_column);
    if (it == doc.header.end()) throw Error(ErrorKind::usage, "id column '" + *id_column + "' not in header");
    id_index = static_cast<std::size_t>(it - doc.header.begin());
  }

  RawTable table;
  table.id_column = id_column;
  std::vector<std::size_t> data_index;
  for (std::size_t j = 0; j < doc.header.size(); ++j) {
    if (id_index && j == *id_index) continue;
    data_index.push_back(j);
    table.column_names.push_back(std::string(csv::trim(doc.header[j])));
  }
  table.columns.assign(data_index.size(), {});

  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    if (row.size() != doc.header.size()) {
      throw Error(ErrorKind::parse, "row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                                        " fields, header has " + std::to_string(doc.header.size()));
    }
    for (std::size_t c = 0; c < data_index.size(); ++c) {
      const std::string& cell = row[data_index[c]];
      table.columns[c].push_back(cell.empty() ? Cell{} : Cell{cell});
    }
    if (id_index) {
      const std::string id(csv::trim(row[*id_index]));
      if (id.empty()) throw Error(ErrorKind::integrity, "row " + std::to_string(r + 1) + " has an empty id");
      table.id_values.push_back(id);
    } else {
      table.id_values.push_back(std::to_string(r));
    }
  }
  table.validate();
  return table;
}

inline RawTable load_csv(const std::string& path, const std::optional<std::string>& id_column = std::nullopt) {
  const std::string text = csv::read_file(path);
  if (csv::trim(text).empty()) throw Error(ErrorKind::empty_input, path + " is empty");
  return parse_csv(text, id_column);
}

/// Serializes a table; the id column (when named) is written first.
inline std::string to_csv(const RawTable& table) {
  std::string out;
  csv::Row header;
  if (table.id_column) header.push_back(*table.id_column);
  header.insert(header.end(), table.column_names.begin(), table.column_names.end());
  csv::append_row(out, header);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    csv::Row row;
    if (table.id_column) row.push_back(table.id_values[i]);
    for (const auto& col : table.columns) row.push_back(col[i].value_or(""));
    csv::append_row(out, row);
  }
  return out;
}

/// Numeric view of a dataset; categorical codes are written as integers.
inline RawTable to_raw(const Dataset& data, const std::optional<std::string>& id_column = std::nullopt) {
  RawTable table;
  table.column_names = data.column_names;
  table.id_values = data.ids;
  table.id_column = id_column;
  table.columns.assign(data.d(), {});
  for (std::size_t j = 0; j < data.d(); ++j) {
    auto& col = table.columns[j];
    col.reserve(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
      col.emplace_back(csv::format_number(data.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
  }
  return table;
}

namespace detail {

/// Most frequent value; ties resolve to the smallest.
inline double mode_of(const std::vector<double>& values) {
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  double best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

}  // namespace detail

inline Dataset encode_and_impute(const RawTable& raw, Provenance provenance = {}) {
  raw.validate();
  const std::size_t n = raw.rows();
  if (n == 0 || raw.columns.empty()) throw Error(ErrorKind::empty_input, "table has no rows or no columns");

  Dataset ds;
  ds.ids = raw.id_values;
  ds.provenance = std::move(provenance);

  std::vector<std::vector<double>> kept;
  std::size_t missing = 0;
  for (std::size_t j = 0; j < raw.columns.size(); ++j) {
    const auto& col = raw.columns[j];
    std::vector<std::string_view> present;
    bool numeric = true;
    for (const auto& cell : col) {
      if (!cell) {
        ++missing;
        continue;
      }
      present.push_back(csv::trim(*cell));
      if (numeric && !csv::parse_number(present.back())) numeric = false;
    }
    if (present.empty()) {
      ds.provenance.notes.push_back("dropped all-missing column '" + raw.column_names[j] + "'");
      continue;
    }

    std::vector<std::string> cats;
    if (!numeric) {
      std::set<std::string> distinct(present.begin(), present.end());
      cats.assign(distinct.begin(), distinct.end());
    }
    const auto encode = [&](std::string_view text) -> double {
      if (numeric) return *csv::parse_number(text);
      const auto it = std::lower_bound(cats.begin(), cats.end(), text);
      return static_cast<double>(it - cats.begin());
    };

    std::vector<double> values;
    values.reserve(present.size());
    for (auto text : present) values.push_back(encode(text));
    const double fill = detail::mode_of(values);

    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = col[i] ? encode(csv::trim(*col[i])) : fill;

    kept.push_back(std::move(column));
    ds.column_names.push_back(raw.column_names[j]);
    ds.column_kinds.push_back(numeric ? ColumnKind::numeric : ColumnKind::categorical);
    ds.categories.push_back(std::move(cats));
  }
  if (kept.empty()) throw Error(ErrorKind::empty_output, "every column is entirely missing");

  ds.missing_fraction = static_cast<double>(missing) / static_cast<double>(n * raw.columns.size());
  ds.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      ds.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kept[j][i];
    }
  }
  return ds;
}

namespace detail {

inline const std::vector<std::string>& key_values(const RawTable& table, const std::string& key,
                                                  std::vector<std::string>& storage) {
  if (table.id_column && *table.id_column == key) return table.id_values;
  const auto it = std::find(table.column_names.begin(), table.column_names.end(), key);
  if (it == table.column_names.end()) throw Error(ErrorKind::usage, "key column '" + key + "' not found");
  const auto& col = table.columns[static_cast<std::size_t>(it - table.column_names.begin())];
  storage.clear();
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < col.size(); ++i) {
    const std::string value = col[i] ? std::string(csv::trim(*col[i])) : std::string();
    if (value.empty()) throw Error(ErrorKind::integrity, "row " + std::to_string(i + 1) + " has an empty key");
    if (!seen.insert(value).second) throw Error(ErrorKind::integrity, "duplicate key '" + value + "'");
    storage.push_back(value);
  }
  return storage;
}

}  // namespace detail

/// Two cells agree after whitespace trimming; numbers compare by value.
inline bool cells_equal(const Cell& a, const Cell& b) {
  const std::string_view ta = a ? csv::trim(*a) : std::string_view();
  const std::string_view tb = b ? csv::trim(*b) : std::string_view();
  if (ta == tb) return true;
  const auto na = csv::parse_number(ta);
  const auto nb = csv::parse_number(tb);
  return na && nb && *na == *nb;
}

/// Irregularity labels for the rows of `preliminary`: 1 when the key is absent
/// from `final_table` or any shared column differs.
inline std::vector<int> diff_labels(const RawTable& preliminary, const RawTable& final_table, const std::string& key) {
  std::vector<std::string> prelim_storage, final_storage;
  const auto& prelim_keys = detail::key_values(preliminary, key, prelim_storage);
  const auto& final_keys = detail::key_values(final_table, key, final_storage);

  std::unordered_map<std::string, std::size_t> final_row;
  for (std::size_t i = 0; i < final_keys.size(); ++i) final_row.emplace(final_keys[i], i);

  std::vector<std::pair<std::size_t, std::size_t>> shared;
  for (std::size_t a = 0; a < preliminary.column_names.size(); ++a) {
    if (preliminary.column_names[a] == key) continue;
    const auto it = std::find(final_table.column_names.begin(), final_table.column_names.end(),
                              preliminary.column_names[a]);
    if (it != final_table.column_names.end()) {
      shared.emplace_back(a, static_cast<std::size_t>(it - final_table.column_names.begin()));
    }
  }

  std::vector<int> labels(prelim_keys.size(), 0);
  for (std::size_t i = 0; i < prelim_keys.size(); ++i) {
    const auto it = final_row.find(prelim_keys[i]);
    if (it == final_row.end()) {
      labels[i] = 1;
      continue;
    }
    for (const auto& [a, b] : shared) {
      if (!cells_equal(preliminary.columns[a][i], final_table.columns[b][it->second])) {
        labels[i] = 1;
        break;
      }
    }
  }
  return labels;
}

/// Label CSV with columns (id, label).
inline std::string labels_to_csv(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  std::string out;
  csv::append_row(out, {"id", "label"});
  for (std::size_t i = 0; i < ids.size(); ++i) csv::append_row(out, {ids[i], std::to_string(labels[i])});
  return out;
}

inline std::unordered_map<std::string, int> read_labels(const std::string& path) {
  const csv::Document doc = csv::parse(csv::read_file(path));
  if (doc.header.size() != 2) throw Error(ErrorKind::parse, path + ": expected columns (id, label)");
  std::unordered_map<std::string, int> out;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    if (row.size() != 2) throw Error(ErrorKind::parse, path + ": row " + std::to_string(r + 1) + " is ragged");
    const std::string_view label = csv::trim(row[1]);
    if (label != "0" && label != "1") {
      throw Error(ErrorKind::parse, path + ": row " + std::to_string(r + 1) + " label must be 0 or 1");
    }
    if (!out.emplace(std::string(csv::trim(row[0])), label == "1" ? 1 : 0).second) {
      throw Error(ErrorKind::integrity, path + ": duplicate id '" + row[0] + "'");
    }
  }
  return out;
}

inline void attach_labels(Dataset& data, const std::unordered_map<std::string, int>& by_id) {
  std::vector<int> labels(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto it = by_id.find(data.ids[i]);
    if (it == by_id.end()) throw Error(ErrorKind::integrity, "no label for id '" + data.ids[i] + "'");
    labels[i] = it->second;
  }
  data.labels = std::move(labels);
}

}  // namespace trialod
