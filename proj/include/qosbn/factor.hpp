#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace qosbn {

/// Table over the joint states of a set of variables, stored in mixed-radix
/// order with the last scope variable varying fastest. Variables are network
/// indices.
class Factor {
 public:
  Factor() : values_{1.0} {}
  Factor(std::vector<std::size_t> scope, std::vector<std::size_t> cards,
         std::vector<double> values);

  static Factor scalar(double v);
  static Factor ones(std::vector<std::size_t> scope, std::vector<std::size_t> cards);

  const std::vector<std::size_t>& scope() const { return scope_; }
  const std::vector<std::size_t>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }

  bool contains(std::size_t var) const;
  /// Position of var within the scope; throws std::invalid_argument otherwise.
  std::size_t position(std::size_t var) const;
  std::size_t cardinality_of(std::size_t var) const { return cards_[position(var)]; }

  double at(std::span<const std::size_t> states) const;
  double sum() const;

 private:
  std::vector<std::size_t> scope_;
  std::vector<std::size_t> cards_;
  std::vector<double> values_;
};

/// Product over the union of scopes; the result scope is a's scope followed
/// by b's remaining variables. Throws on a cardinality mismatch.
Factor factor_multiply(const Factor& a, const Factor& b);

/// Sums v out of f. Throws std::invalid_argument when v is not in scope.
Factor factor_marginalize(const Factor& f, std::size_t v);

/// Keeps only entries with v = state and drops v from the scope.
Factor factor_reduce(const Factor& f, std::size_t v, std::size_t state);

/// Reorders the scope. new_scope must be a permutation of f.scope().
Factor factor_permute(const Factor& f, const std::vector<std::size_t>& new_scope);

/// Divides by the sum; returns the sum. Leaves the factor untouched when the
/// sum is zero.
double factor_normalize(Factor& f);

/// Evidence resolved to network indices.
struct IndexedEvidence {
  std::map<std::size_t, std::size_t> hard;
  std::map<std::size_t, std::vector<double>> soft;
};

enum class HardEvidenceMode {
  slice,  ///< drop the observed variable from the scope
  zero,   ///< keep the scope, zero inconsistent entries
};

/// Conditions f on the evidence. Soft evidence multiplies each entry by the
/// likelihood of its state; variables outside the scope are ignored.
Factor apply_evidence(const Factor& f, const IndexedEvidence& e,
                      HardEvidenceMode mode = HardEvidenceMode::slice);

}  // namespace qosbn
