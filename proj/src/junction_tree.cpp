#include "hidpas/junction_tree.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace hidpas {

void UndirectedGraph::add_edge(std::size_t a, std::size_t b) {
  if (a == b) return;
  adjacency_.at(a).insert(b);
  adjacency_.at(b).insert(a);
}

void UndirectedGraph::remove_node_edges(std::size_t node) {
  for (auto n : adjacency_.at(node)) adjacency_[n].erase(node);
  adjacency_[node].clear();
}

bool UndirectedGraph::adjacent(std::size_t a, std::size_t b) const {
  return adjacency_.at(a).count(b) > 0;
}

std::size_t UndirectedGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : adjacency_) n += s.size();
  return n / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> UndirectedGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < adjacency_.size(); ++a) {
    for (auto b : adjacency_[a]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

UndirectedGraph moralize(const Dag& dag) {
  UndirectedGraph g(dag.size());
  for (VarId c = 0; c < dag.size(); ++c) {
    const auto& ps = dag.parents(c);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      g.add_edge(ps[i], c);
      for (std::size_t j = i + 1; j < ps.size(); ++j) g.add_edge(ps[i], ps[j]);
    }
  }
  return g;
}

namespace {

std::size_t fill_count(const UndirectedGraph& g, std::size_t node) {
  const auto& nb = g.neighbours(node);
  std::size_t missing = 0;
  for (auto i = nb.begin(); i != nb.end(); ++i) {
    for (auto j = std::next(i); j != nb.end(); ++j) {
      if (!g.adjacent(*i, *j)) ++missing;
    }
  }
  return missing;
}

void eliminate(UndirectedGraph& g, std::size_t node) {
  std::vector<std::size_t> nb(g.neighbours(node).begin(), g.neighbours(node).end());
  for (std::size_t i = 0; i < nb.size(); ++i) {
    for (std::size_t j = i + 1; j < nb.size(); ++j) g.add_edge(nb[i], nb[j]);
  }
  g.remove_node_edges(node);
}

bool is_subset(const Cluster& small, const Cluster& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

std::vector<std::size_t> choose_order(const UndirectedGraph& graph, OrderStrategy strategy,
                                      const std::vector<std::size_t>& given_order) {
  if (strategy == OrderStrategy::given) return given_order;
  UndirectedGraph work = graph;
  std::vector<bool> done(graph.size(), false);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < graph.size(); ++step) {
    std::size_t best = graph.size();
    std::size_t best_fill = 0;
    for (std::size_t v = 0; v < graph.size(); ++v) {
      if (done[v]) continue;
      auto f = fill_count(work, v);
      if (best == graph.size() || f < best_fill) {
        best = v;
        best_fill = f;
      }
    }
    done[best] = true;
    order.push_back(best);
    eliminate(work, best);
  }
  return order;
}

std::vector<Cluster> elimination_clusters(const UndirectedGraph& graph,
                                          const std::vector<std::size_t>& order) {
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  bool permutation = sorted.size() == graph.size();
  for (std::size_t i = 0; permutation && i < sorted.size(); ++i) permutation = sorted[i] == i;
  if (!permutation) {
    fail(ErrorKind::invalid_argument, "elimination order must be a permutation of the nodes");
  }
  UndirectedGraph work = graph;
  std::vector<Cluster> clusters;
  for (auto node : order) {
    Cluster c(work.neighbours(node).begin(), work.neighbours(node).end());
    c.push_back(node);
    std::sort(c.begin(), c.end());
    eliminate(work, node);
    bool redundant = std::any_of(clusters.begin(), clusters.end(),
                                 [&](const Cluster& earlier) { return is_subset(c, earlier); });
    if (!redundant) clusters.push_back(std::move(c));
  }
  return clusters;
}

JunctionTree::JunctionTree(std::vector<Cluster> clusters, std::vector<TreeEdge> edges)
    : clusters_(std::move(clusters)), edges_(std::move(edges)) {}

std::optional<std::size_t> JunctionTree::containing_cluster(std::span<const VarId> vars) const {
  Cluster want(vars.begin(), vars.end());
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    if (is_subset(want, clusters_[i])) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> JunctionTree::clusters_with(VarId var) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    if (std::binary_search(clusters_[i].begin(), clusters_[i].end(), var)) out.push_back(i);
  }
  return out;
}

bool JunctionTree::is_forest() const {
  std::vector<std::size_t> parent(clusters_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges_) {
    auto ra = find(e.a), rb = find(e.b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

bool JunctionTree::has_running_intersection() const {
  std::set<VarId> vars;
  for (const auto& c : clusters_) vars.insert(c.begin(), c.end());
  for (VarId v : vars) {
    auto holders = clusters_with(v);
    std::set<std::size_t> members(holders.begin(), holders.end());
    std::set<std::size_t> reached{holders.front()};
    std::vector<std::size_t> frontier{holders.front()};
    while (!frontier.empty()) {
      auto c = frontier.back();
      frontier.pop_back();
      for (const auto& e : edges_) {
        std::size_t other;
        if (e.a == c) other = e.b;
        else if (e.b == c) other = e.a;
        else continue;
        if (members.count(other) && reached.insert(other).second) frontier.push_back(other);
      }
    }
    if (reached.size() != members.size()) return false;
  }
  return true;
}

std::string JunctionTree::describe(const Dag& dag) const {
  auto fmt = [&](const std::vector<VarId>& vs) {
    std::string s = "{";
    for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + dag.variable(vs[i]).name;
    return s + "}";
  };
  std::ostringstream out;
  for (const auto& e : edges_) {
    out << "cluster " << fmt(clusters_[e.a]) << " -- sep " << fmt(e.separator) << " -- cluster "
        << fmt(clusters_[e.b]) << "\n";
  }
  std::vector<bool> touched(clusters_.size(), false);
  for (const auto& e : edges_) touched[e.a] = touched[e.b] = true;
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    if (!touched[i]) out << "cluster " << fmt(clusters_[i]) << "\n";
  }
  return out.str();
}

JunctionTree build_tree(const std::vector<Cluster>& clusters) {
  std::vector<TreeEdge> candidates;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters.size(); ++j) {
      TreeEdge e{i, j, {}};
      std::set_intersection(clusters[i].begin(), clusters[i].end(), clusters[j].begin(),
                            clusters[j].end(), std::back_inserter(e.separator));
      if (!e.separator.empty()) candidates.push_back(std::move(e));
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const TreeEdge& x, const TreeEdge& y) {
    if (x.weight() != y.weight()) return x.weight() > y.weight();
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  std::vector<std::size_t> parent(clusters.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<TreeEdge> chosen;
  for (auto& e : candidates) {
    auto ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    chosen.push_back(std::move(e));
  }
  return JunctionTree(clusters, std::move(chosen));
}

JunctionTree build_junction_tree(const Dag& dag, OrderStrategy strategy,
                                 const std::vector<std::size_t>& given_order) {
  auto moral = moralize(dag);
  auto order = choose_order(moral, strategy, given_order);
  return build_tree(elimination_clusters(moral, order));
}

Potential::Potential(std::vector<VarId> scope, std::vector<std::size_t> arities, double fill)
    : scope_(std::move(scope)), arities_(std::move(arities)) {
  if (scope_.size() != arities_.size()) {
    fail(ErrorKind::internal, "potential scope and arity lists differ in length");
  }
  table_.assign(configuration_count(arities_), fill);
}

std::vector<std::size_t> Potential::projection(const std::vector<VarId>& sub) const {
  // Stride of each of our scope positions inside the sub-potential's layout.
  std::vector<std::size_t> stride(scope_.size(), 0);
  std::size_t acc = 1;
  for (std::size_t i = sub.size(); i-- > 0;) {
    auto it = std::find(scope_.begin(), scope_.end(), sub[i]);
    if (it == scope_.end()) fail(ErrorKind::internal, "projection onto a variable outside the scope");
    auto pos = static_cast<std::size_t>(it - scope_.begin());
    stride[pos] = acc;
    acc *= arities_[pos];
  }
  std::vector<std::size_t> out(table_.size());
  std::vector<std::size_t> digits(scope_.size(), 0);
  std::size_t index = 0;
  for (std::size_t n = 0; n < table_.size(); ++n) {
    out[n] = index;
    for (std::size_t i = scope_.size(); i-- > 0;) {
      if (++digits[i] < arities_[i]) {
        index += stride[i];
        break;
      }
      index -= stride[i] * (arities_[i] - 1);
      digits[i] = 0;
    }
  }
  return out;
}

Potential cpt_potential(const BayesNet& net, VarId var) {
  const Cpt& cpt = net.cpt(var);
  std::vector<VarId> scope = cpt.parents;
  scope.push_back(var);
  std::vector<std::size_t> arities;
  for (VarId v : scope) arities.push_back(net.variable(v).arity());
  Potential pot(scope, arities, 0.0);
  const std::size_t r = net.variable(var).arity();
  for (std::size_t j = 0; j < cpt.rows.size(); ++j) {
    for (std::size_t k = 0; k < r; ++k) pot.table()[j * r + k] = cpt.rows[j][k];
  }
  return pot;
}

std::vector<Potential> cpt_potentials(const BayesNet& net) {
  std::vector<Potential> out;
  for (VarId v = 0; v < net.size(); ++v) out.push_back(cpt_potential(net, v));
  return out;
}

TreeState::TreeState(std::shared_ptr<const JunctionTree> tree, std::vector<std::size_t> arities,
                     Semiring semiring)
    : tree_(std::move(tree)), arities_(std::move(arities)), semiring_(semiring) {
  auto make = [&](const std::vector<VarId>& vars) {
    std::vector<std::size_t> ar;
    for (VarId v : vars) ar.push_back(arities_.at(v));
    return Potential(vars, ar, 1.0);
  };
  for (const auto& c : tree_->clusters()) clusters_.push_back(make(c));
  for (const auto& e : tree_->edges()) separators_.push_back(make(e.separator));
}

TreeState initialize_potentials(std::shared_ptr<const JunctionTree> tree,
                                std::span<const Potential> factors,
                                std::span<const std::size_t> arities, Semiring semiring) {
  TreeState state(std::move(tree), {arities.begin(), arities.end()}, semiring);
  for (const auto& f : factors) {
    auto home = state.tree_->containing_cluster(f.scope());
    if (!home) fail(ErrorKind::internal, "factor scope fits no junction-tree cluster");
    Potential& target = state.clusters_[*home];
    auto proj = target.projection(f.scope());
    auto& t = target.table();
    for (std::size_t n = 0; n < t.size(); ++n) {
      double x = f.table()[proj[n]];
      t[n] = semiring == Semiring::sum_product ? t[n] * x : std::min(t[n], x);
    }
  }
  return state;
}

namespace {

Potential marginalize(const Potential& from, const std::vector<VarId>& onto, Semiring semiring) {
  std::vector<std::size_t> ar;
  for (VarId v : onto) {
    auto it = std::find(from.scope().begin(), from.scope().end(), v);
    ar.push_back(from.arities()[static_cast<std::size_t>(it - from.scope().begin())]);
  }
  Potential out(onto, ar, 0.0);
  auto proj = from.projection(onto);
  for (std::size_t n = 0; n < from.size(); ++n) {
    double& slot = out.table()[proj[n]];
    slot = semiring == Semiring::sum_product ? slot + from.table()[n]
                                             : std::max(slot, from.table()[n]);
  }
  return out;
}

}  // namespace

TreeState propagate(TreeState state, const Evidence& evidence) {
  const JunctionTree& jt = *state.tree_;
  const bool sum = state.semiring_ == Semiring::sum_product;

  for (const auto& [var, observed] : evidence) {
    if (var >= state.arities_.size() || observed >= state.arities_[var]) {
      fail(ErrorKind::invalid_argument, "evidence outside the tree's variables or states");
    }
    for (auto c : jt.clusters_with(var)) {
      auto& pot = state.clusters_[c];
      auto proj = pot.projection({var});
      for (std::size_t n = 0; n < pot.size(); ++n) {
        if (proj[n] != observed) pot.table()[n] = 0.0;
      }
    }
  }

  const std::size_t n_clusters = jt.clusters().size();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n_clusters);  // (nbr, edge)
  for (std::size_t e = 0; e < jt.edges().size(); ++e) {
    adj[jt.edges()[e].a].emplace_back(jt.edges()[e].b, e);
    adj[jt.edges()[e].b].emplace_back(jt.edges()[e].a, e);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  auto send = [&](std::size_t from, std::size_t to, std::size_t edge) {
    Potential& sep = state.separators_[edge];
    Potential message = marginalize(state.clusters_[from], sep.scope(), state.semiring_);
    Potential& target = state.clusters_[to];
    auto proj = target.projection(sep.scope());
    if (sum) {
      std::vector<double> ratio(message.size());
      for (std::size_t i = 0; i < ratio.size(); ++i) {
        double old = sep.table()[i];
        ratio[i] = old == 0.0 ? 0.0 : message.table()[i] / old;
      }
      for (std::size_t n = 0; n < target.size(); ++n) target.table()[n] *= ratio[proj[n]];
    } else {
      for (std::size_t n = 0; n < target.size(); ++n) {
        target.table()[n] = std::min(target.table()[n], message.table()[proj[n]]);
      }
    }
    sep.table() = std::move(message.table());
  };

  std::vector<bool> visited(n_clusters, false);
  state.possibility_cap_ = 1.0;
  for (std::size_t root = 0; root < n_clusters; ++root) {
    if (visited[root]) continue;
    // Preorder walk of this component from its lowest-index cluster.
    struct Step { std::size_t node, parent, edge; };
    std::vector<Step> preorder;
    std::vector<Step> stack{{root, root, 0}};
    visited[root] = true;
    while (!stack.empty()) {
      Step s = stack.back();
      stack.pop_back();
      preorder.push_back(s);
      for (auto it = adj[s.node].rbegin(); it != adj[s.node].rend(); ++it) {
        if (!visited[it->first]) {
          visited[it->first] = true;
          stack.push_back({it->first, s.node, it->second});
        }
      }
    }
    for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
      if (it->node != root) send(it->node, it->parent, it->edge);
    }
    for (const auto& s : preorder) {
      if (s.node != root) send(s.parent, s.node, s.edge);
    }
    const auto& t = state.clusters_[root].table();
    double mass = sum ? std::accumulate(t.begin(), t.end(), 0.0)
                      : (t.empty() ? 0.0 : *std::max_element(t.begin(), t.end()));
    if (!(mass > 0.0)) fail(ErrorKind::impossible_evidence, "evidence is impossible under the model");
    if (!sum) state.possibility_cap_ = std::min(state.possibility_cap_, mass);
  }
  state.calibrated_ = true;
  return state;
}

std::vector<double> cluster_marginal(const TreeState& state, std::size_t cluster, VarId var) {
  const Potential& pot = state.clusters_.at(cluster);
  if (std::find(pot.scope().begin(), pot.scope().end(), var) == pot.scope().end()) {
    fail(ErrorKind::invalid_argument, "variable is not in the requested cluster");
  }
  return marginalize(pot, {var}, state.semiring_).table();
}

std::vector<double> query_marginal(const TreeState& state, VarId var) {
  if (!state.calibrated()) fail(ErrorKind::invalid_argument, "query on an uncalibrated tree");
  auto holders = state.tree().clusters_with(var);
  if (holders.empty()) {
    fail(ErrorKind::invalid_argument, "variable " + std::to_string(var) + " is not in the tree");
  }
  auto m = cluster_marginal(state, holders.front(), var);
  if (state.semiring() == Semiring::max_min) {
    for (auto& x : m) x = std::min(x, state.possibility_cap_);
  }
  double scale = state.semiring() == Semiring::sum_product
                     ? std::accumulate(m.begin(), m.end(), 0.0)
                     : *std::max_element(m.begin(), m.end());
  if (!(scale > 0.0)) fail(ErrorKind::impossible_evidence, "evidence is impossible under the model");
  for (auto& x : m) x /= scale;
  return m;
}

}  // namespace hidpas
