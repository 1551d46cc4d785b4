#include "hidpas/possibility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace hidpas {

std::vector<double> prob_to_poss(std::span<const double> p) {
  if (p.empty()) fail(ErrorKind::invalid_argument, "empty probability vector");
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      fail(ErrorKind::invalid_argument, "probabilities must be finite and nonnegative");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorKind::invalid_argument, "probabilities sum to " + format_probability(total) + ", not 1");
  }

  const std::size_t n = p.size();
  std::vector<double> q(p.begin(), p.end());
  for (auto& x : q) {
    if (x < kZeroProbability) x = 0.0;
  }
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto b) { return q[a] > q[b]; });

  // tail[i] = p_i + ... + p_n over the sorted order, summed from the small end.
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) tail[i] = tail[i + 1] + q[rank[i]];

  const double p1 = q[rank[0]];
  std::vector<double> pi(n, 0.0);
  std::size_t lead = 0;  // first sorted position of the current tie group
  for (std::size_t i = 0; i < n; ++i) {
    const double pi_val = q[rank[i]];
    if (i > 0 && pi_val != q[rank[i - 1]]) lead = i;
    double value;
    if (pi_val == 0.0) {
      value = 0.0;
    } else if (lead == 0) {
      value = 1.0;  // k_1 = 1 and (p_1 / p_1)^(1 - p_1) = 1
    } else {
      const double ratio_log = std::log(pi_val / p1);
      const double k = std::log(tail[lead]) / ((1.0 - pi_val) * ratio_log);
      value = std::exp(k * (1.0 - pi_val) * ratio_log);
    }
    pi[rank[i]] = value;
  }
  return pi;
}

std::vector<double> necessity(std::span<const double> possibility) {
  const std::size_t n = possibility.size();
  std::vector<double> out(n, 0.0);
  // Largest and second-largest values cover "max over the other states".
  double first = 0.0, second = 0.0;
  std::size_t first_at = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (first_at == n || possibility[i] > first) {
      second = first;
      first = possibility[i];
      first_at = i;
    } else if (possibility[i] > second) {
      second = possibility[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double other = i == first_at ? (n > 1 ? second : 0.0) : first;
    out[i] = std::clamp(1.0 - other, 0.0, 1.0);
  }
  return out;
}

bool is_informative(const Triple& triple, double tau) { return triple.gap() <= tau; }

std::vector<Potential> possibilistic_potentials(const BayesNet& net) {
  std::vector<Potential> out;
  for (VarId v = 0; v < net.size(); ++v) {
    Potential pot = cpt_potential(net, v);
    const std::size_t r = net.variable(v).arity();
    auto& t = pot.table();
    for (std::size_t start = 0; start < t.size(); start += r) {
      auto row = prob_to_poss(std::span<const double>(t.data() + start, r));
      std::copy(row.begin(), row.end(), t.begin() + static_cast<std::ptrdiff_t>(start));
    }
    out.push_back(std::move(pot));
  }
  return out;
}

namespace {

std::vector<std::size_t> arities_of(const BayesNet& net) {
  std::vector<std::size_t> out;
  for (const auto& v : net.dag().variables()) out.push_back(v.arity());
  return out;
}

}  // namespace

HybridEngine::HybridEngine(BayesNet net, OrderStrategy strategy)
    : net_(std::move(net)),
      tree_(std::make_shared<const JunctionTree>(build_junction_tree(net_.dag(), strategy))),
      probabilistic_(initialize_potentials(tree_, cpt_potentials(net_), arities_of(net_),
                                           Semiring::sum_product)),
      possibilistic_(initialize_potentials(tree_, possibilistic_potentials(net_), arities_of(net_),
                                           Semiring::max_min)) {}

std::vector<HybridMarginal> HybridEngine::query(const Evidence& evidence,
                                                std::span<const VarId> targets) const {
  check_evidence(net_.dag(), evidence);
  TreeState prob = propagate(probabilistic_, evidence);
  TreeState poss = propagate(possibilistic_, evidence);
  std::vector<HybridMarginal> out;
  for (VarId t : targets) {
    HybridMarginal m;
    m.variable = t;
    m.probability = query_marginal(prob, t);
    m.possibility = query_marginal(poss, t);
    m.necessity = necessity(m.possibility);
    out.push_back(std::move(m));
  }
  return out;
}

HybridMarginal HybridEngine::query(const Evidence& evidence, VarId target) const {
  return query(evidence, std::span<const VarId>(&target, 1)).front();
}

std::vector<double> HybridEngine::probability(const Evidence& evidence, VarId target) const {
  check_evidence(net_.dag(), evidence);
  return query_marginal(propagate(probabilistic_, evidence), target);
}

std::vector<HybridMarginal> hybrid_propagate(const BayesNet& net, const Evidence& evidence,
                                             std::span<const VarId> targets) {
  return HybridEngine(net).query(evidence, targets);
}

void SandwichReport::merge(const SandwichReport& other) {
  states += other.states;
  violations += other.violations;
  max_violation = std::max(max_violation, other.max_violation);
}

SandwichReport measure_sandwich(const HybridMarginal& marginal, double slack) {
  SandwichReport report;
  for (std::size_t k = 0; k < marginal.arity(); ++k) {
    const Triple t = marginal.triple(k);
    const double excess = std::max(t.necessity - t.probability, t.probability - t.possibility);
    ++report.states;
    if (excess > slack) {
      ++report.violations;
      report.max_violation = std::max(report.max_violation, excess);
    }
  }
  return report;
}

Selection select_state(const HybridMarginal& marginal, double tau) {
  if (marginal.arity() == 0) fail(ErrorKind::invalid_argument, "empty marginal");
  std::optional<StateIndex> best;
  for (StateIndex k = 0; k < marginal.arity(); ++k) {
    if (!is_informative(marginal.triple(k), tau)) continue;
    if (!best || marginal.probability[k] > marginal.probability[*best]) best = k;
  }
  if (best) return {*best, false};
  StateIndex top = 0;
  for (StateIndex k = 1; k < marginal.arity(); ++k) {
    if (marginal.probability[k] > marginal.probability[top]) top = k;
  }
  return {top, true};
}

}  // namespace hidpas
