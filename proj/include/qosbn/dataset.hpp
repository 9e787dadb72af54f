#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qosbn/network.hpp"

namespace qosbn {

/// Cell value for an unobserved variable.
inline constexpr int kMissing = -1;

/// Observed cells of one row, keyed by variable id. Missing cells are absent.
using Record = std::map<std::string, std::string>;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows of categorical observations over an ordered schema. Cells hold a
/// state index into the column's variable or kMissing.
struct Dataset {
  std::vector<Variable> variables;
  std::vector<std::vector<int>> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t width() const { return variables.size(); }
  std::optional<std::size_t> column(const std::string& id) const;
  /// Throws DataError naming the variable when absent.
  std::size_t require_column(const std::string& id) const;

  /// Appends a record; throws DataError on unknown variables or labels.
  void add(const Record& r);
  Record record(std::size_t row) const;
};

Dataset make_dataset(std::vector<Variable> variables, const std::vector<Record>& records);

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);
Dataset concat(const Dataset& a, const Dataset& b);
/// Rows where `variable` is observed as `label`.
Dataset filter_equal(const Dataset& ds, const std::string& variable, const std::string& label);
Dataset drop_variable(const Dataset& ds, const std::string& variable);
/// Replaces a column's state list; observed labels outside it raise DataError.
Dataset restrict_states(const Dataset& ds, const std::string& variable,
                        const std::vector<std::string>& labels);

/// Per column of `bn`, the dataset column holding it and a map from dataset
/// state index to network state index. Throws DataError when a network
/// variable is absent or a dataset label is unknown to the network.
struct ColumnBinding {
  std::vector<std::size_t> column;
  std::vector<std::vector<int>> state_map;
  /// Row of ds translated to network indices (kMissing kept).
  std::vector<int> translate(const std::vector<int>& row) const;
};
ColumnBinding bind_columns(const BayesianNetwork& bn, const Dataset& ds);

nlohmann::json schema_to_json(const Dataset& ds);
std::vector<Variable> schema_from_json(const nlohmann::json& j);

/// Sidecar path holding the ordered schema for a dataset file.
std::filesystem::path schema_path(const std::filesystem::path& data_path);

/// JSON lines, one object per record with missing cells omitted, plus the
/// schema sidecar.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
/// Without a sidecar, states are taken in first-appearance order.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace qosbn
