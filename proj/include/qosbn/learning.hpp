#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qosbn/dataset.hpp"
#include "qosbn/network.hpp"

namespace qosbn {

class LearningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmConfig {
  std::size_t max_iterations = 200;
  /// Stop once successive trace values differ by less than this.
  double tolerance = 1e-6;
  double pseudocount = 1.0;
  std::uint64_t seed = 0;
  /// Extra runs from seeded random starting points; the best objective wins.
  std::size_t restarts = 0;
  /// Worker threads for the E-step. Results do not depend on this value.
  std::size_t threads = 1;

  /// Throws std::invalid_argument on a zero iteration budget, a
  /// non-positive tolerance or a negative pseudocount.
  void validate() const;
};

struct EmResult {
  BayesianNetwork network;
  /// Objective before each M-step and at the returned parameters:
  /// log-likelihood plus pseudocount * sum of log parameters. With a zero
  /// pseudocount this is the log-likelihood itself. Never decreases.
  std::vector<double> trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Per-family counting with (count + a) / (total + a * card). Rows with no
/// weight and a zero pseudocount become uniform. Each family only counts rows
/// where all of its cells are observed. Throws DataError when a network
/// variable is absent from the data, std::invalid_argument for noisy-MAX
/// families.
BayesianNetwork learn_mle(const BayesianNetwork& skeleton, const Dataset& data,
                          double pseudocount = 1.0);

/// Expectation-maximization from the skeleton's structure. CPT families start
/// uniform. Noisy-MAX families take each parent's most frequent state as its
/// off state and start from baseline-record estimates of the link vectors.
EmResult learn_em(const BayesianNetwork& skeleton, const Dataset& data, const EmConfig& cfg = {});

struct LikelihoodReport {
  double value = 0.0;  // -inf when any record has probability zero
  std::vector<std::size_t> zero_rows;
};

/// Sum over rows of log P(observed cells), unobserved cells marginalized.
LikelihoodReport log_likelihood_report(const BayesianNetwork& bn, const Dataset& data);
double log_likelihood(const BayesianNetwork& bn, const Dataset& data);

/// Same network with every distribution replaced by a uniform one; noisy-MAX
/// off states keep their degenerate vector.
BayesianNetwork uniform_parameters(const BayesianNetwork& bn);

/// Uniform draw in [0, 1) from 53 random bits; portable across libraries.
double unit_uniform(std::mt19937_64& rng);

/// Ancestral sampling of n complete records.
Dataset sample_dataset(const BayesianNetwork& bn, std::size_t n, std::mt19937_64& rng);

/// Copies ds with each cell independently erased with probability p.
Dataset erase_cells(const Dataset& ds, double p, std::mt19937_64& rng);

}  // namespace qosbn
