#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qosbn/factor.hpp"
#include "qosbn/network.hpp"

namespace qosbn {

/// Hard observations plus soft (virtual) likelihood vectors.
struct EvidenceSet {
  std::map<std::string, std::string> hard;
  std::map<std::string, std::vector<double>> soft;

  bool empty() const { return hard.empty() && soft.empty(); }
  /// Human-readable rendering, e.g. "{cloud=aws, region~(0.8,0.2)}".
  std::string describe() const;
};

/// Evidence that names unknown variables or states, or carries a malformed
/// likelihood vector.
class InvalidEvidence : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The evidence has probability zero under the network.
class ImpossibleEvidence : public std::runtime_error {
 public:
  explicit ImpossibleEvidence(const std::string& evidence)
      : std::runtime_error("impossible evidence " + evidence), evidence_(evidence) {}
  const std::string& evidence() const { return evidence_; }

 private:
  std::string evidence_;
};

IndexedEvidence resolve_evidence(const BayesianNetwork& bn, const EvidenceSet& e);

struct Posterior {
  std::string variable;
  std::vector<std::string> states;
  std::vector<double> distribution;
  /// Normalization constant P(e) of the query that produced this posterior.
  double evidence_probability = 1.0;
};

struct InferenceOptions {
  /// Noisy-MAX families whose expanded table would exceed this many entries
  /// are evaluated through the cumulative-product decomposition instead.
  std::size_t noisy_max_table_limit = std::size_t{1} << 22;
  /// Explicit elimination order (variable ids); variables it omits are
  /// eliminated afterwards by min-fill. Unset means pure min-fill.
  std::optional<std::vector<std::string>> elimination_order;
};

/// Variable elimination over a fixed network. The engine keeps a pointer to
/// the network, which must outlive it. All queries are const and safe to run
/// concurrently.
class InferenceEngine {
 public:
  explicit InferenceEngine(const BayesianNetwork& bn, InferenceOptions options = {});

  const BayesianNetwork& network() const { return *bn_; }

  /// Normalized joint posterior over `query` (in the given order).
  /// Hard-evidence query variables get an indicator. Writes P(e) when
  /// `evidence_probability` is non-null. Throws ImpossibleEvidence.
  Factor marginal(const IndexedEvidence& e, const std::vector<std::size_t>& query,
                  double* evidence_probability = nullptr) const;

  /// P(e); 0 for impossible evidence (never throws for that case).
  double evidence_probability(const IndexedEvidence& e) const;

  Posterior posterior(const EvidenceSet& e, const std::string& query) const;

  /// Names each elimination step would pick for the given evidence and query.
  std::vector<std::string> elimination_order(const IndexedEvidence& e,
                                             const std::vector<std::size_t>& query) const;

  bool uses_decomposition(std::size_t node) const;

 private:
  struct Reduced;
  Reduced eliminate(const IndexedEvidence& e, const std::vector<std::size_t>& keep,
                    std::vector<std::string>* order_out) const;
  const std::string& name_of(std::size_t var) const;

  const BayesianNetwork* bn_;
  InferenceOptions options_;
  std::vector<Factor> base_;
  std::vector<std::size_t> cards_;       // network variables then auxiliaries
  std::vector<std::string> aux_names_;   // names of auxiliary variables
  std::vector<bool> decomposed_;
  bool signed_ = false;
};

/// Exact P(query | e) by variable elimination.
Posterior posterior(const BayesianNetwork& bn, const EvidenceSet& e, const std::string& query,
                    const InferenceOptions& options = {});

/// Argmax of the posterior; ties go to the lowest state index.
std::string map_state(const BayesianNetwork& bn, const EvidenceSet& e, const std::string& query,
                      const InferenceOptions& options = {});
std::size_t argmax_lowest(const std::vector<double>& distribution);

/// Evidence-weighted table over every network variable (in network order),
/// built by brute-force enumeration of the chain-rule product.
struct JointTable {
  Factor table;
  double evidence_probability = 0.0;
  bool impossible = false;
};

inline constexpr std::size_t kDefaultEnumerationLimit = std::size_t{1} << 22;

class StateSpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

JointTable enumerate_joint(const BayesianNetwork& bn, const EvidenceSet& e,
                           std::size_t limit = kDefaultEnumerationLimit);

/// Posterior of one variable read off an enumerated joint. Throws
/// ImpossibleEvidence when the table is all zero.
Posterior posterior_from_joint(const BayesianNetwork& bn, const JointTable& joint,
                               const std::string& query);

}  // namespace qosbn
