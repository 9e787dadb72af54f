#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "qosbn/dataset.hpp"
#include "qosbn/network.hpp"

namespace qosbn {

enum class StructureKind { nbn, tan, nor, cbn };

std::string to_string(StructureKind kind);
/// Accepts nbn, tan, nor, cbn in any case; throws std::invalid_argument.
StructureKind structure_kind_from_string(const std::string& s);

struct Edge {
  std::string parent;
  std::string child;
  bool operator==(const Edge&) const = default;
};

struct StructureSpec {
  StructureKind kind = StructureKind::nbn;
  std::string class_variable = "qos_value";
  /// Empty means every schema variable other than the class.
  std::vector<std::string> features;
  std::optional<std::vector<Edge>> cbn_edges;
};

class StructureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

nlohmann::json structure_to_json(const StructureSpec& spec);
StructureSpec structure_from_json(const nlohmann::json& j);
StructureSpec load_structure(const std::filesystem::path& path);

/// Features resolved against the schema; throws StructureError when the class
/// is listed as a feature or an id is unknown.
std::vector<std::string> resolve_features(const StructureSpec& spec,
                                          const std::vector<Variable>& schema);

/// Class is the sole parent of every feature.
BayesianNetwork build_nbn(const StructureSpec& spec, const std::vector<Variable>& schema);

struct TanDiagnostics {
  /// Feature-pair weights, as (i, j, cmi) with i < j in feature order.
  std::vector<std::tuple<std::size_t, std::size_t, double>> weights;
  /// Undirected tree edges as (parent, child) after rooting.
  std::vector<Edge> tree;
  std::optional<std::string> notice;
};

/// Chow-Liu tree over the features weighted by CMI given the class, rooted at
/// the first feature, plus class -> feature arcs. Each feature lists its
/// parents as [class, feature parent].
BayesianNetwork build_tan(const StructureSpec& spec, const Dataset& data,
                          TanDiagnostics* diagnostics = nullptr);

/// Every feature is a parent of the class, whose distribution is noisy-MAX.
BayesianNetwork build_nor(const StructureSpec& spec, const std::vector<Variable>& schema);

/// Exactly the edges of spec.cbn_edges over the class, the features and any
/// variable named by an edge.
BayesianNetwork build_cbn(const StructureSpec& spec, const std::vector<Variable>& schema);

/// Dispatches on spec.kind; TAN reads the data, the others only its schema.
BayesianNetwork build_structure(const StructureSpec& spec, const Dataset& data,
                                TanDiagnostics* diagnostics = nullptr);

/// CMI(X_i; X_j | X_c) in nats over rows observing all three columns, with
/// one pseudocount added to every cell of the three-way table. Throws
/// StructureError when i == j.
double conditional_mutual_information(const Dataset& data, std::size_t i, std::size_t j,
                                      std::size_t c, double pseudocount = 1.0);

/// The shipped reference CBN over the ingested factors.
StructureSpec reference_cbn();
/// Drops features and edges naming variables outside `available`.
StructureSpec restrict_structure(const StructureSpec& spec, const std::vector<Variable>& schema);

}  // namespace qosbn
