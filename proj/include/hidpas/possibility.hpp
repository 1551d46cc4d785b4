#pragma once

// Probability -> possibility transformation, necessity, and the hybrid
// propagation that brackets every posterior probability by [N, Π].

#include <memory>
#include <span>
#include <vector>

#include "hidpas/bn.hpp"
#include "hidpas/junction_tree.hpp"

namespace hidpas {

/// Probabilities below this are treated as exact zeros by the transformation.
inline constexpr double kZeroProbability = 1e-12;

/// Transforms a probability distribution into a normalised possibility
/// distribution aligned with the input's state order.
///
/// On the descending-sorted distribution every state is assigned
///   π_i = (p_i / p_1)^(k_i (1 - p_i)),
///   k_i = log(p_i + ... + p_n) / ((1 - p_i) log(p_i / p_1)),  k_1 = 1,
/// evaluated at the first position of its group of equal probabilities, so
/// tied states share a value and the p_i = p_1 singularity never occurs.
/// Zero-probability states map to 0. Throws invalid_argument unless the input
/// is nonnegative and sums to 1 within 1e-9.
std::vector<double> prob_to_poss(std::span<const double> p);

/// N(x) = 1 - max_{y != x} π(y).
std::vector<double> necessity(std::span<const double> possibility);

struct Triple {
  double necessity = 0.0;
  double probability = 0.0;
  double possibility = 0.0;

  double gap() const noexcept { return possibility - necessity; }
  bool operator==(const Triple&) const = default;
};

/// True iff Π - N <= tau.
bool is_informative(const Triple& triple, double tau);

inline constexpr double kDefaultTau = 0.5;

struct HybridMarginal {
  VarId variable = 0;
  std::vector<double> necessity;
  std::vector<double> probability;
  std::vector<double> possibility;

  std::size_t arity() const noexcept { return probability.size(); }
  Triple triple(StateIndex k) const { return {necessity.at(k), probability.at(k), possibility.at(k)}; }
};

struct Selection {
  StateIndex state = 0;
  bool low_confidence = false;
};

/// Highest-probability informative state. When no state is informative the
/// highest-probability state overall is returned, flagged low-confidence.
/// Ties go to the lower state index.
Selection select_state(const HybridMarginal& marginal, double tau);

/// Every CPT row replaced by its possibility transform.
std::vector<Potential> possibilistic_potentials(const BayesNet& net);

/// Holds one junction tree and the initial potentials of both propagation
/// modes for a network, so repeated queries only pay for propagation.
/// Immutable after construction; query() is safe to call concurrently.
class HybridEngine {
 public:
  explicit HybridEngine(BayesNet net, OrderStrategy strategy = OrderStrategy::min_fill);

  const BayesNet& network() const noexcept { return net_; }
  const JunctionTree& tree() const noexcept { return *tree_; }

  /// Throws impossible_evidence when the evidence has probability 0.
  std::vector<HybridMarginal> query(const Evidence& evidence, std::span<const VarId> targets) const;
  HybridMarginal query(const Evidence& evidence, VarId target) const;

  /// Plain sum-product marginal, for comparison with the hybrid P component.
  std::vector<double> probability(const Evidence& evidence, VarId target) const;

 private:
  BayesNet net_;
  std::shared_ptr<const JunctionTree> tree_;
  TreeState probabilistic_;
  TreeState possibilistic_;
};

std::vector<HybridMarginal> hybrid_propagate(const BayesNet& net, const Evidence& evidence,
                                             std::span<const VarId> targets);

/// Measured N <= P <= Π violations across the states of one marginal.
struct SandwichReport {
  std::size_t states = 0;
  std::size_t violations = 0;
  double max_violation = 0.0;

  void merge(const SandwichReport& other);
};

SandwichReport measure_sandwich(const HybridMarginal& marginal, double slack = 1e-12);

}  // namespace hidpas
