#pragma once

// Junction-tree construction (moralise, order, eliminate, max-weight spanning
// tree) and message passing parameterised by semiring: sum-product for
// probabilities and max-min for possibilities.

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "hidpas/bn.hpp"

namespace hidpas {

enum class Semiring { sum_product, max_min };

class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(std::size_t nodes) : adjacency_(nodes) {}

  void add_edge(std::size_t a, std::size_t b);
  void remove_node_edges(std::size_t node);
  bool adjacent(std::size_t a, std::size_t b) const;
  std::size_t size() const noexcept { return adjacency_.size(); }
  const std::set<std::size_t>& neighbours(std::size_t node) const { return adjacency_.at(node); }
  std::size_t edge_count() const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

 private:
  std::vector<std::set<std::size_t>> adjacency_;
};

UndirectedGraph moralize(const Dag& dag);

enum class OrderStrategy { given, min_fill };

/// `given` returns `given_order` unchanged; `min-fill` greedily picks the node
/// whose elimination adds the fewest fill edges, lowest id on ties.
std::vector<std::size_t> choose_order(const UndirectedGraph& graph, OrderStrategy strategy,
                                      const std::vector<std::size_t>& given_order = {});

using Cluster = std::vector<VarId>;  // sorted member ids

std::vector<Cluster> elimination_clusters(const UndirectedGraph& graph,
                                          const std::vector<std::size_t>& order);

struct TreeEdge {
  std::size_t a = 0;  // cluster indices, a < b
  std::size_t b = 0;
  std::vector<VarId> separator;
  std::size_t weight() const noexcept { return separator.size(); }
};

/// Table over the joint states of an ordered scope, row-major with the last
/// scope variable varying fastest.
class Potential {
 public:
  Potential() = default;
  Potential(std::vector<VarId> scope, std::vector<std::size_t> arities, double fill);

  const std::vector<VarId>& scope() const noexcept { return scope_; }
  const std::vector<std::size_t>& arities() const noexcept { return arities_; }
  std::vector<double>& table() noexcept { return table_; }
  const std::vector<double>& table() const noexcept { return table_; }
  std::size_t size() const noexcept { return table_.size(); }

  /// For every entry of this potential, the matching entry index in a
  /// potential whose scope is `sub` (each member must be in this scope).
  std::vector<std::size_t> projection(const std::vector<VarId>& sub) const;

 private:
  std::vector<VarId> scope_;
  std::vector<std::size_t> arities_;
  std::vector<double> table_;
};

/// CPT of `var` as a potential over (parents..., var).
Potential cpt_potential(const BayesNet& net, VarId var);
std::vector<Potential> cpt_potentials(const BayesNet& net);

class JunctionTree {
 public:
  JunctionTree() = default;
  JunctionTree(std::vector<Cluster> clusters, std::vector<TreeEdge> edges);

  const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
  const std::vector<TreeEdge>& edges() const noexcept { return edges_; }

  /// Lowest-index cluster containing every variable of `vars`, if any.
  std::optional<std::size_t> containing_cluster(std::span<const VarId> vars) const;
  std::vector<std::size_t> clusters_with(VarId var) const;
  bool has_running_intersection() const;
  bool is_forest() const;

  /// Text dump, one line per tree edge: `cluster {A,B} -- sep {B} -- cluster {B,C}`.
  std::string describe(const Dag& dag) const;

 private:
  std::vector<Cluster> clusters_;
  std::vector<TreeEdge> edges_;
};

/// Maximum-weight spanning forest over |S_i ∩ S_j|, zero-weight edges
/// excluded, ties broken by the lexicographically smaller (i, j) pair.
JunctionTree build_tree(const std::vector<Cluster>& clusters);

/// Structure for a network: moralise, choose the order, eliminate, span.
JunctionTree build_junction_tree(const Dag& dag, OrderStrategy strategy = OrderStrategy::min_fill,
                                 const std::vector<std::size_t>& given_order = {});

/// Potentials attached to a tree. Propagation returns a calibrated copy; a
/// calibrated state is read-only and may serve concurrent queries.
class TreeState {
 public:
  TreeState(std::shared_ptr<const JunctionTree> tree, std::vector<std::size_t> arities,
            Semiring semiring);

  const JunctionTree& tree() const noexcept { return *tree_; }
  Semiring semiring() const noexcept { return semiring_; }
  const std::vector<Potential>& cluster_potentials() const noexcept { return clusters_; }
  const std::vector<Potential>& separator_potentials() const noexcept { return separators_; }
  bool calibrated() const noexcept { return calibrated_; }
  std::size_t arity(VarId v) const { return arities_.at(v); }

 private:
  friend TreeState initialize_potentials(std::shared_ptr<const JunctionTree>,
                                         std::span<const Potential>, std::span<const std::size_t>,
                                         Semiring);
  friend TreeState propagate(TreeState, const Evidence&);
  friend std::vector<double> cluster_marginal(const TreeState&, std::size_t, VarId);
  friend std::vector<double> query_marginal(const TreeState&, VarId);

  std::shared_ptr<const JunctionTree> tree_;
  std::vector<std::size_t> arities_;
  Semiring semiring_;
  std::vector<Potential> clusters_;
  std::vector<Potential> separators_;
  bool calibrated_ = false;
  // Smallest per-component maximum after max-min calibration; caps every marginal.
  double possibility_cap_ = 1.0;
};

/// Combines each factor into its lowest-index containing cluster (product or
/// min). Throws internal when a factor fits no cluster.
TreeState initialize_potentials(std::shared_ptr<const JunctionTree> tree,
                                std::span<const Potential> factors,
                                std::span<const std::size_t> arities, Semiring semiring);

/// Collect/distribute from the lowest-index cluster of each component.
/// Throws impossible_evidence when a component carries no mass.
TreeState propagate(TreeState state, const Evidence& evidence);

/// Probabilities sum to 1; possibilities are rescaled so the maximum is 1.
std::vector<double> query_marginal(const TreeState& state, VarId var);

/// Unnormalised marginal of `var` read from a specific cluster.
std::vector<double> cluster_marginal(const TreeState& state, std::size_t cluster, VarId var);

}  // namespace hidpas
