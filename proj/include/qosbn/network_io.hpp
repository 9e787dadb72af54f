#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qosbn/network.hpp"

namespace qosbn {

/// Rows within this distance of summing to one are renormalized on load;
/// anything further off is left for validation to reject.
inline constexpr double kLoadRenormalizeTolerance = 1e-6;

/// Network file layout:
///
///   {
///     "variables": [{"id": "cloud", "name": "Cloud", "states": ["aws", "gce"]}, ...],
///     "edges":     [{"child": "cpu_type", "parents": ["region", "vm_size"]}, ...],
///     "cpds": [
///       {"child": "cloud", "type": "table", "rows": [[0.4, 0.6]]},
///       {"child": "qos_value", "type": "noisy_max",
///        "leak": [...],
///        "link_params": [{"parent": "cloud", "off_state": "aws", "vectors": [[...], ...]}]}
///     ]
///   }
///
/// Table rows follow the mixed-radix parent order with the last parent
/// varying fastest.
NetworkDefinition definition_from_json(const nlohmann::json& doc);
nlohmann::json definition_to_json(const NetworkDefinition& def);

BayesianNetwork network_from_json(const nlohmann::json& doc);
nlohmann::json network_to_json(const BayesianNetwork& bn);

BayesianNetwork load_network(const std::filesystem::path& path);
void save_network(const BayesianNetwork& bn, const std::filesystem::path& path);

/// Thrown for malformed documents (as opposed to well-formed but invalid
/// networks, which raise InvalidNetwork).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qosbn
