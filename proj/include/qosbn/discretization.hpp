#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qosbn {

/// Ordered bin edges mapping a continuous value to a 1-based state.
///
/// Bin i covers [edges[i], edges[i+1]). With open_top the last bin is
/// [edges.back(), +inf); otherwise the last bin is closed on the right,
/// [edges[k-1], edges[k]].
struct DiscretizationSpec {
  std::string variable = "qos_value";
  std::vector<double> edges;
  bool open_top = false;
  /// One label per bin; these become the variable's state labels.
  std::vector<std::string> labels;
  /// Optional display metadata.
  std::vector<int> printed_states;
  std::vector<std::size_t> reference_counts;
  std::string unit;

  std::size_t bin_count() const { return open_top ? edges.size() : edges.size() - 1; }
  /// Throws std::invalid_argument on non-increasing edges or a label count
  /// that does not match the bins.
  void validate() const;
};

struct BinAssignment {
  std::size_t state_index = 0;  // 1-based
  std::string state_label;
};

enum class RangePolicy {
  clamp,  ///< values below the first edge go to state 1, above the top to the last state
  reject, ///< out-of-range values raise OutOfRange
};

class OutOfRange : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

BinAssignment assign_state(const DiscretizationSpec& spec, double value,
                           RangePolicy policy = RangePolicy::clamp);

/// Histogram under assign_state. With RangePolicy::reject, out-of-range
/// values are skipped rather than thrown.
std::vector<std::size_t> state_counts(const DiscretizationSpec& spec, std::span<const double> values,
                                      RangePolicy policy = RangePolicy::clamp);

struct HierarchicalResult {
  DiscretizationSpec spec;
  std::optional<std::string> notice;
};

/// Variance-guided recursive median splitting: starting from one bin, split
/// the bin with the largest within-bin variance at its median until
/// target_states bins exist. Edges are snapped to data values.
HierarchicalResult hierarchical_discretize(std::span<const double> values,
                                           std::size_t target_states,
                                           const std::string& variable = "qos_value");

/// Labels in the "a to b" / "greater than a" style of the presets.
std::vector<std::string> default_labels(const std::vector<double>& edges, bool open_top);

/// Benchmark names with a shipped preset: cpu, compile, memory, oltp, io.
const std::vector<std::string>& preset_names();
/// Throws std::out_of_range for an unknown benchmark.
const DiscretizationSpec& preset(const std::string& benchmark);

nlohmann::json spec_to_json(const DiscretizationSpec& spec);
DiscretizationSpec spec_from_json(const nlohmann::json& j);
DiscretizationSpec load_spec(const std::filesystem::path& path);

}  // namespace qosbn
