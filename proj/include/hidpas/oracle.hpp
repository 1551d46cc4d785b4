#pragma once

// Brute-force reference computations. Nothing here goes through the junction
// tree; these routines enumerate joint assignments directly and exist to check
// the fast paths.

#include <cstdint>
#include <random>
#include <string>

#include "hidpas/bn.hpp"
#include "hidpas/junction_tree.hpp"
#include "hidpas/learning.hpp"

namespace hidpas::oracle {

struct RandomNetOptions {
  std::size_t min_variables = 2;
  std::size_t max_variables = 8;
  std::size_t min_arity = 2;
  std::size_t max_arity = 3;
  std::size_t max_parents = 3;
  /// Chance that a CPT entry is forced to exactly zero (row keeps one nonzero).
  double zero_fraction = 0.05;
};

BayesNet random_network(std::mt19937_64& rng, const RandomNetOptions& options = {});
Evidence random_evidence(std::mt19937_64& rng, const BayesNet& net, std::size_t max_observed);

/// Posterior of `var` by summing the joint over all assignments; empty when
/// the evidence has probability zero.
std::vector<double> enumerate_marginal(const BayesNet& net, const Evidence& evidence, VarId var);

/// max over consistent assignments of min over factors, rescaled to max 1;
/// empty when every consistent assignment has possibility zero.
std::vector<double> enumerate_possibility(const BayesNet& net, const std::vector<Potential>& factors,
                                          const Evidence& evidence, VarId var);

/// Product of raw factorials, exp of the K2 log-score. Exact in double only
/// while every factorial argument stays below ~20.
double direct_k2_score(const CountStatistics& stats);

/// π_i = Σ_{j : p_j <= p_i} p_j, zero for zero-probability states.
std::vector<double> tail_sum_possibility(std::span<const double> p);

struct InferenceOracleReport {
  std::size_t networks = 0;
  std::size_t queries = 0;
  std::size_t impossible = 0;          // evidence with P = 0, checked to be reported
  std::size_t probability_failures = 0;
  std::size_t possibility_failures = 0;
  double max_probability_error = 0.0;
  double max_possibility_error = 0.0;
  double seconds_probability = 0.0;
  double seconds_possibility = 0.0;

  bool ok() const noexcept { return probability_failures == 0 && possibility_failures == 0; }
  std::string summary(bool timing = true) const;
};

/// Sum-product and max-min junction-tree marginals against enumeration on
/// `networks` seeded random networks with random hard evidence.
InferenceOracleReport run_inference_oracles(std::uint64_t seed, std::size_t networks,
                                            double probability_tolerance = 1e-9,
                                            double possibility_tolerance = 1e-12);

struct TransformOracleReport {
  std::size_t distributions = 0;
  std::size_t tail_sum_failures = 0;
  std::size_t first_not_one = 0;
  std::size_t extension_failures = 0;  // fixed tie and zero cases
  std::size_t sandwich_violations = 0;        // beyond the tolerance
  std::size_t sandwich_exact_violations = 0;  // any rounding excess at all
  double max_error = 0.0;
  double seconds = 0.0;

  bool ok() const noexcept {
    return tail_sum_failures == 0 && first_not_one == 0 && extension_failures == 0 && sandwich_violations == 0;
  }
  std::string summary(bool timing = true) const;
};

/// Possibility transform against the tail-sum identity on `count` random
/// strictly decreasing distributions of at most 10 states, plus fixed tie and
/// zero cases and the N <= p <= Π sandwich.
TransformOracleReport run_transform_oracles(std::uint64_t seed, std::size_t count, double tolerance = 1e-12);

/// Two-state chain A -> B -> C sample, uniform root, child copies its parent
/// with probability `fidelity`.
DiscreteDataset sample_chain(std::mt19937_64& rng, std::size_t rows, double fidelity = 0.9);

struct K2OracleReport {
  std::size_t score_checks = 0;
  std::size_t score_failures = 0;
  double max_relative_error = 0.0;
  std::size_t chain_datasets = 0;
  std::size_t chain_recovered = 0;
  double seconds = 0.0;

  std::string summary(bool timing = true) const;
};

/// Log-score against direct factorials on random datasets of at most 12
/// rows, and chain recovery by k2_search under the true order.
K2OracleReport run_k2_oracles(std::uint64_t seed, std::size_t score_trials = 300, std::size_t chain_datasets = 20,
                              std::size_t chain_rows = 5000);

}  // namespace hidpas::oracle
