#include "hidpas/learning.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hidpas {

DiscreteDataset::DiscreteDataset(std::vector<Variable> columns) : columns_(std::move(columns)) {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].id != i) {
      fail(ErrorKind::invalid_argument, "dataset column ids must match their position");
    }
  }
}

void DiscreteDataset::add_row(std::span<const StateIndex> row) {
  if (row.size() != width()) {
    fail(ErrorKind::invalid_argument, "row has " + std::to_string(row.size()) + " cells, expected " +
                                          std::to_string(width()));
  }
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] >= columns_[c].arity()) {
      fail(ErrorKind::invalid_argument, "cell " + std::to_string(row[c]) + " out of range for column '" +
                                            columns_[c].name + "'");
    }
  }
  for (auto v : row) cells_.push_back(static_cast<std::uint32_t>(v));
}

CountStatistics count_statistics(const DiscreteDataset& data, VarId var,
                                 std::span<const VarId> parents) {
  if (var >= data.width()) {
    fail(ErrorKind::invalid_argument, "unknown column " + std::to_string(var));
  }
  for (VarId p : parents) {
    if (p >= data.width()) fail(ErrorKind::invalid_argument, "unknown parent column " + std::to_string(p));
    if (p == var) fail(ErrorKind::invalid_argument, "variable cannot be its own parent");
  }
  CountStatistics stats;
  stats.variable = var;
  stats.parents.assign(parents.begin(), parents.end());
  stats.arity = data.columns()[var].arity();
  std::vector<std::size_t> arities;
  for (VarId p : parents) arities.push_back(data.columns()[p].arity());
  stats.configs = configuration_count(arities);
  stats.counts.assign(stats.configs * stats.arity, 0);
  stats.marginals.assign(stats.configs, 0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto row = data.row(r);
    std::size_t j = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) j = j * arities[i] + row[parents[i]];
    ++stats.counts[j * stats.arity + row[var]];
    ++stats.marginals[j];
  }
  return stats;
}

double k2_local_log_score(const CountStatistics& stats) {
  // ln[(r-1)! / (N_ij + r - 1)!] + sum_k ln N_ijk!, with n! = Gamma(n + 1).
  const double r = static_cast<double>(stats.arity);
  double score = 0.0;
  for (std::size_t j = 0; j < stats.configs; ++j) {
    const auto n_ij = static_cast<double>(stats.marginals[j]);
    if (n_ij == 0) continue;  // unit factor
    score += std::lgamma(r) - std::lgamma(n_ij + r);
    for (std::size_t k = 0; k < stats.arity; ++k) {
      score += std::lgamma(static_cast<double>(stats.count(j, k)) + 1.0);
    }
  }
  return score;
}

LearnConfig LearnConfig::identity(std::size_t n, std::size_t max_parents) {
  LearnConfig config;
  config.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) config.order[i] = i;
  config.max_parents = max_parents;
  return config;
}

Dag k2_search(const DiscreteDataset& data, const LearnConfig& config) {
  std::set<VarId> seen(config.order.begin(), config.order.end());
  if (config.order.size() != data.width() || seen.size() != data.width() ||
      (!seen.empty() && *seen.rbegin() >= data.width())) {
    fail(ErrorKind::invalid_argument, "K2 order must be a permutation of the dataset columns");
  }
  Dag dag(data.columns());
  for (std::size_t pos = 0; pos < config.order.size(); ++pos) {
    const VarId var = config.order[pos];
    std::vector<VarId> parents;
    double best = k2_local_log_score(count_statistics(data, var, parents));
    while (parents.size() < config.max_parents) {
      std::optional<VarId> pick;
      double pick_score = 0.0;
      // Ascending ids with a strict comparison: equal scores keep the lowest id.
      std::vector<VarId> candidates(config.order.begin(), config.order.begin() + pos);
      std::sort(candidates.begin(), candidates.end());
      for (VarId cand : candidates) {
        if (std::find(parents.begin(), parents.end(), cand) != parents.end()) continue;
        auto trial = parents;
        trial.push_back(cand);
        double s = k2_local_log_score(count_statistics(data, var, trial));
        if (!pick || s > pick_score) {
          pick = cand;
          pick_score = s;
        }
      }
      if (!pick || !(pick_score > best + kScoreTolerance)) break;
      parents.push_back(*pick);
      best = pick_score;
    }
    for (VarId p : parents) dag.add_edge(p, var);
  }
  return dag;
}

BayesNet fit_cpts(const DiscreteDataset& data, const Dag& dag, double smoothing) {
  if (dag.size() != data.width()) {
    fail(ErrorKind::invalid_argument, "DAG and dataset disagree on the variable count");
  }
  if (!(smoothing >= 0.0)) fail(ErrorKind::invalid_argument, "smoothing must be nonnegative");
  std::vector<Cpt> cpts;
  for (VarId v = 0; v < dag.size(); ++v) {
    if (dag.variable(v).arity() != data.columns()[v].arity()) {
      fail(ErrorKind::invalid_argument, "arity mismatch for '" + dag.variable(v).name + "'");
    }
    const auto& parents = dag.parents(v);
    auto stats = count_statistics(data, v, parents);
    Cpt cpt;
    cpt.variable = v;
    cpt.parents = parents;
    const double r = static_cast<double>(stats.arity);
    for (std::size_t j = 0; j < stats.configs; ++j) {
      std::vector<double> row(stats.arity);
      const double denom = static_cast<double>(stats.marginals[j]) + r * smoothing;
      for (std::size_t k = 0; k < stats.arity; ++k) {
        row[k] = denom > 0 ? (static_cast<double>(stats.count(j, k)) + smoothing) / denom : 1.0 / r;
      }
      cpt.rows.push_back(std::move(row));
    }
    cpts.push_back(std::move(cpt));
  }
  return BayesNet(dag, std::move(cpts));
}

}  // namespace hidpas
