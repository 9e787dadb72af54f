#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace qosbn {

/// Absolute tolerance for probability rows summing to one.
inline constexpr double kRowSumTolerance = 1e-9;

/// A categorical random variable with ordered state labels.
struct Variable {
  std::string id;
  std::string name;
  std::vector<std::string> states;

  std::size_t cardinality() const { return states.size(); }
  std::optional<std::size_t> state_index(const std::string& label) const;
};

/// Conditional probability table. Rows are indexed by parent configuration in
/// mixed-radix order over the parent cardinalities, last parent varying
/// fastest; each row is a distribution over the child's states.
struct Cpt {
  std::string child;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> rows;
};

/// Leaky noisy-MAX distribution. The child's states are graded, state 0 being
/// the baseline. Each parent acts as an independent cause: while in state s it
/// produces an isolated effect distributed as link_params[p][s], and the child
/// takes the maximum of all effects and the leak. Each parent has an "off"
/// state whose link vector is the degenerate (1, 0, ..., 0).
struct NoisyMaxCpd {
  std::string child;
  std::vector<std::string> parents;
  std::vector<std::size_t> off_states;
  std::vector<std::vector<std::vector<double>>> link_params;
  std::vector<double> leak;
};

using Cpd = std::variant<Cpt, NoisyMaxCpd>;

const std::string& cpd_child(const Cpd& cpd);
const std::vector<std::string>& cpd_parents(const Cpd& cpd);

/// Unvalidated network description, mirroring the JSON network format. May
/// hold any inconsistency; validate_network reports them.
struct NetworkDefinition {
  std::vector<Variable> variables;
  std::map<std::string, std::vector<std::string>> parent_map;
  std::vector<Cpd> cpds;
};

struct Violation {
  std::string node;
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_network(const NetworkDefinition& def);

class InvalidNetwork : public std::runtime_error {
 public:
  explicit InvalidNetwork(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Immutable, validated Bayesian network with index-based lookups.
class BayesianNetwork {
 public:
  /// Throws InvalidNetwork when validate_network reports violations.
  explicit BayesianNetwork(NetworkDefinition def);

  const NetworkDefinition& definition() const { return def_; }
  std::size_t size() const { return def_.variables.size(); }
  const Variable& variable(std::size_t i) const { return def_.variables[i]; }
  const std::vector<Variable>& variables() const { return def_.variables; }
  std::size_t cardinality(std::size_t i) const { return cards_[i]; }
  const std::vector<std::size_t>& cardinalities() const { return cards_; }

  std::optional<std::size_t> find(const std::string& id) const;
  /// Throws std::out_of_range naming the id.
  std::size_t index_of(const std::string& id) const;

  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
  const Cpd& cpd(std::size_t i) const { return def_.cpds[cpd_of_[i]]; }
  bool is_noisy_max(std::size_t i) const;

  /// Parents before children; ties broken by declaration order.
  const std::vector<std::size_t>& topological_order() const { return topo_; }

  /// P(child = child_state | parents = parent_states), parent_states in the
  /// CPD's parent order. Noisy-MAX families are evaluated without expansion.
  double conditional(std::size_t node, std::size_t child_state,
                     const std::vector<std::size_t>& parent_states) const;

 private:
  NetworkDefinition def_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> cards_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::size_t> cpd_of_;
  std::vector<std::size_t> topo_;
};

/// Full assignment node id -> state label.
using Assignment = std::map<std::string, std::string>;

/// Product of the family conditionals for a complete assignment, accumulated
/// in log space. Returns exactly 0 when any factor is 0. Throws
/// std::invalid_argument on a missing node or unknown label.
double joint_probability(const BayesianNetwork& bn, const Assignment& assignment);

/// Same as joint_probability, with states given as indices in network order.
double joint_probability(const BayesianNetwork& bn, const std::vector<std::size_t>& states);

/// Expands a noisy-MAX distribution into its full table using
/// P(child <= k | x) = prod over parents and leak of P(effect <= k).
Cpt expand_noisy_max(const NoisyMaxCpd& cpd);

/// Number of parent configurations (product of cardinalities; 1 when empty).
std::size_t configuration_count(const std::vector<std::size_t>& cards);

/// Mixed-radix index of states over cards, last position fastest.
std::size_t mixed_radix_index(const std::vector<std::size_t>& states,
                              const std::vector<std::size_t>& cards);

/// Inverse of mixed_radix_index.
std::vector<std::size_t> mixed_radix_decode(std::size_t index,
                                            const std::vector<std::size_t>& cards);

}  // namespace qosbn
