#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "qosbn/dataset.hpp"
#include "qosbn/learning.hpp"
#include "qosbn/structure.hpp"

namespace qosbn {

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  /// Record index -> fold id.
  std::vector<std::size_t> assignment;

  std::vector<std::vector<std::size_t>> folds() const;
};

/// Seeded Fisher-Yates shuffle, then round-robin fold assignment. Throws
/// std::invalid_argument when k is 0 or exceeds n.
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// Uniform integer in [0, bound] by rejection sampling; portable.
std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t tested = 0;
  std::size_t correct = 0;
  bool skipped = false;
  double accuracy() const { return tested ? static_cast<double>(correct) / static_cast<double>(tested) : 0.0; }
};

struct EvalReport {
  std::string structure;
  std::string label;  // benchmark or dataset name
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> states;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<FoldResult> folds;
  /// Records without a class value; trained on, never scored.
  std::size_t unscored = 0;
  /// Test records whose evidence was impossible under the fold's model and
  /// were predicted from the prior instead.
  std::size_t prior_fallbacks = 0;
  std::vector<std::string> notices;

  std::size_t tested() const;
  std::size_t correct() const;
  /// trace(confusion) / sum(confusion).
  double accuracy() const;
  /// Unweighted mean over non-skipped folds.
  double mean_fold_accuracy() const;
};

struct CvOptions {
  std::size_t k = 10;
  std::uint64_t seed = 1;
  EmConfig em;
  std::string label;
};

/// k-fold cross-validation: per fold, build the structure on the training
/// rows, fit it by EM and predict the class of each test record from its
/// observed feature cells.
EvalReport cross_validate(const StructureSpec& spec, const Dataset& data, const CvOptions& options);

struct Aggregates {
  double cell_mean = 0.0;
  double benchmark_mean = 0.0;
  double record_weighted = 0.0;
};

/// Three aggregations of a set of reports, as fractions.
Aggregates aggregate_accuracy(const std::vector<EvalReport>& reports);
/// Unweighted mean of report accuracies, as a percentage. Throws on empty input.
double overall_accuracy(const std::vector<EvalReport>& reports);

nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json reports_to_json(const std::vector<EvalReport>& reports);

/// Rows are structures, columns are labels, cells are percentages.
std::string accuracy_table(const std::vector<EvalReport>& reports);

}  // namespace qosbn
