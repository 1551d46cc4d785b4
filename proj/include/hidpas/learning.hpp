#pragma once

// K2 structure search and CPT fitting over complete discrete data.

#include <cstdint>
#include <optional>
#include <vector>

#include "hidpas/bn.hpp"

namespace hidpas {

/// Complete discrete dataset stored row-major; each cell is a state index
/// into the corresponding column's Variable.
class DiscreteDataset {
 public:
  DiscreteDataset() = default;
  explicit DiscreteDataset(std::vector<Variable> columns);

  /// Throws invalid_argument when the row width or a cell index is wrong.
  void add_row(std::span<const StateIndex> row);

  const std::vector<Variable>& columns() const noexcept { return columns_; }
  std::vector<Variable>& mutable_columns() noexcept { return columns_; }
  std::size_t width() const noexcept { return columns_.size(); }
  std::size_t rows() const noexcept { return width() ? cells_.size() / width() : 0; }
  StateIndex cell(std::size_t row, std::size_t column) const {
    return cells_[row * width() + column];
  }
  std::span<const std::uint32_t> row(std::size_t r) const {
    return {cells_.data() + r * width(), width()};
  }

 private:
  std::vector<Variable> columns_;
  std::vector<std::uint32_t> cells_;
};

struct CountStatistics {
  VarId variable = 0;
  std::vector<VarId> parents;
  std::size_t arity = 0;    // r_i
  std::size_t configs = 1;  // q_i
  /// counts[j * arity + k] = N_ijk
  std::vector<std::uint64_t> counts;
  /// marginals[j] = N_ij
  std::vector<std::uint64_t> marginals;

  std::uint64_t count(std::size_t j, std::size_t k) const { return counts[j * arity + k]; }
};

CountStatistics count_statistics(const DiscreteDataset& data, VarId var,
                                 std::span<const VarId> parents);

/// Natural log of the Cooper-Herskovits score, via log-gamma sums.
double k2_local_log_score(const CountStatistics& stats);

struct LearnConfig {
  std::vector<VarId> order;
  std::size_t max_parents = 2;
  double smoothing = 1.0;

  /// Identity order over `n` variables.
  static LearnConfig identity(std::size_t n, std::size_t max_parents = 2);
};

/// Minimum log-score improvement accepted when adding a parent.
inline constexpr double kScoreTolerance = 1e-12;

Dag k2_search(const DiscreteDataset& data, const LearnConfig& config);

/// (N_ijk + s) / (N_ij + r_i s); rows with no mass fall back to uniform.
BayesNet fit_cpts(const DiscreteDataset& data, const Dag& dag, double smoothing = 1.0);

}  // namespace hidpas
