#include "hidpas/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hidpas/possibility.hpp"

namespace hidpas::oracle {

BayesNet random_network(std::mt19937_64& rng, const RandomNetOptions& options) {
  std::uniform_int_distribution<std::size_t> n_dist(options.min_variables, options.max_variables);
  std::uniform_int_distribution<std::size_t> arity_dist(options.min_arity, options.max_arity);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = n_dist(rng);

  std::vector<Variable> vars;
  for (std::size_t i = 0; i < n; ++i) {
    Variable v;
    v.id = i;
    v.name = "X" + std::to_string(i);
    const std::size_t r = arity_dist(rng);
    for (std::size_t k = 0; k < r; ++k) v.states.push_back("s" + std::to_string(k));
    vars.push_back(std::move(v));
  }
  // Parents are drawn among a random permutation's predecessors so that the
  // ids are not already a topological order.
  std::vector<VarId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Dag dag(vars);
  for (std::size_t pos = 1; pos < n; ++pos) {
    std::vector<VarId> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_int_distribution<std::size_t> k_dist(0, std::min(options.max_parents, pool.size()));
    const std::size_t k = k_dist(rng);
    for (std::size_t i = 0; i < k; ++i) dag.add_edge(pool[i], order[pos]);
  }

  std::vector<Cpt> cpts;
  for (VarId v = 0; v < n; ++v) {
    Cpt cpt;
    cpt.variable = v;
    cpt.parents = dag.parents(v);
    std::size_t q = 1;
    for (VarId p : cpt.parents) q *= vars[p].arity();
    const std::size_t r = vars[v].arity();
    for (std::size_t j = 0; j < q; ++j) {
      std::vector<double> row(r);
      for (auto& x : row) x = unit(rng) < options.zero_fraction ? 0.0 : 0.05 + unit(rng);
      if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; })) {
        row[std::uniform_int_distribution<std::size_t>(0, r - 1)(rng)] = 1.0;
      }
      const double s = std::accumulate(row.begin(), row.end(), 0.0);
      for (auto& x : row) x /= s;
      cpt.rows.push_back(std::move(row));
    }
    cpts.push_back(std::move(cpt));
  }
  return BayesNet(std::move(dag), std::move(cpts));
}

Evidence random_evidence(std::mt19937_64& rng, const BayesNet& net, std::size_t max_observed) {
  std::vector<VarId> ids(net.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t k =
      std::uniform_int_distribution<std::size_t>(0, std::min(max_observed, net.size()))(rng);
  Evidence ev;
  for (std::size_t i = 0; i < k; ++i) {
    ev[ids[i]] =
        std::uniform_int_distribution<std::size_t>(0, net.variable(ids[i]).arity() - 1)(rng);
  }
  return ev;
}

namespace {

/// Calls `visit(assignment)` for every joint assignment consistent with the
/// evidence, odometer style over ids ascending.
template <class Visit>
void for_each_assignment(const BayesNet& net, const Evidence& evidence, Visit&& visit) {
  std::vector<StateIndex> a(net.size(), 0);
  for (const auto& [v, s] : evidence) a[v] = s;
  while (true) {
    visit(a);
    std::size_t i = net.size();
    while (i-- > 0) {
      if (evidence.count(i)) continue;
      if (++a[i] < net.variable(i).arity()) break;
      a[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) return;
  }
}

}  // namespace

std::vector<double> enumerate_marginal(const BayesNet& net, const Evidence& evidence, VarId var) {
  std::vector<double> m(net.variable(var).arity(), 0.0);
  for_each_assignment(net, evidence, [&](const std::vector<StateIndex>& a) {
    double p = 1.0;
    for (VarId v = 0; v < net.size(); ++v) {
      const Cpt& cpt = net.cpt(v);
      std::size_t row = 0;
      for (VarId parent : cpt.parents) row = row * net.variable(parent).arity() + a[parent];
      p *= cpt.rows[row][a[v]];
    }
    m[a[var]] += p;
  });
  const double total = std::accumulate(m.begin(), m.end(), 0.0);
  if (!(total > 0.0)) return {};
  for (auto& x : m) x /= total;
  return m;
}

std::vector<double> enumerate_possibility(const BayesNet& net, const std::vector<Potential>& factors,
                                          const Evidence& evidence, VarId var) {
  std::vector<double> m(net.variable(var).arity(), 0.0);
  for_each_assignment(net, evidence, [&](const std::vector<StateIndex>& a) {
    double degree = 1.0;
    for (const auto& f : factors) {
      std::size_t index = 0;
      for (std::size_t i = 0; i < f.scope().size(); ++i) index = index * f.arities()[i] + a[f.scope()[i]];
      degree = std::min(degree, f.table()[index]);
    }
    m[a[var]] = std::max(m[a[var]], degree);
  });
  const double top = *std::max_element(m.begin(), m.end());
  if (!(top > 0.0)) return {};
  for (auto& x : m) x /= top;
  return m;
}

double direct_k2_score(const CountStatistics& stats) {
  auto factorial = [](std::uint64_t n) {
    double f = 1.0;
    for (std::uint64_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
  };
  double s = 1.0;
  for (std::size_t j = 0; j < stats.configs; ++j) {
    double term = factorial(stats.arity - 1) / factorial(stats.marginals[j] + stats.arity - 1);
    for (std::size_t k = 0; k < stats.arity; ++k) term *= factorial(stats.count(j, k));
    s *= term;
  }
  return s;
}

std::vector<double> tail_sum_possibility(std::span<const double> p) {
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] <= p[i]) out[i] += p[j];
    }
  }
  return out;
}

std::string InferenceOracleReport::summary(bool timing) const {
  std::ostringstream out;
  out << "networks=" << networks << " queries=" << queries << " impossible=" << impossible
      << " probability_failures=" << probability_failures
      << " max_probability_error=" << max_probability_error
      << " possibility_failures=" << possibility_failures
      << " max_possibility_error=" << max_possibility_error;
  if (timing) out << " seconds_probability=" << seconds_probability << " seconds_possibility=" << seconds_possibility;
  return out.str();
}

InferenceOracleReport run_inference_oracles(std::uint64_t seed, std::size_t networks,
                                            double probability_tolerance,
                                            double possibility_tolerance) {
  using clock = std::chrono::steady_clock;
  InferenceOracleReport report;
  std::mt19937_64 rng(seed);
  for (std::size_t n = 0; n < networks; ++n) {
    BayesNet net = random_network(rng);
    Evidence ev = random_evidence(rng, net, net.size() / 2 + 1);
    auto tree = std::make_shared<const JunctionTree>(build_junction_tree(net.dag()));
    std::vector<std::size_t> arities;
    for (const auto& v : net.dag().variables()) arities.push_back(v.arity());
    ++report.networks;

    auto t0 = clock::now();
    bool impossible = enumerate_marginal(net, ev, 0).empty();
    if (impossible) ++report.impossible;
    try {
      auto calibrated = propagate(
          initialize_potentials(tree, cpt_potentials(net), arities, Semiring::sum_product), ev);
      for (VarId v = 0; v < net.size(); ++v) {
        ++report.queries;
        auto expect = enumerate_marginal(net, ev, v);
        auto got = query_marginal(calibrated, v);
        for (std::size_t k = 0; k < expect.size(); ++k) {
          double err = std::abs(expect[k] - got[k]);
          report.max_probability_error = std::max(report.max_probability_error, err);
          if (!(err <= probability_tolerance)) {
            ++report.probability_failures;
            break;
          }
        }
        if (impossible) ++report.probability_failures;
      }
    } catch (const Error& e) {
      if (!(impossible && e.kind() == ErrorKind::impossible_evidence)) ++report.probability_failures;
    }
    auto t1 = clock::now();

    auto factors = possibilistic_potentials(net);
    try {
      auto calibrated = propagate(
          initialize_potentials(tree, factors, arities, Semiring::max_min), ev);
      for (VarId v = 0; v < net.size(); ++v) {
        auto expect = enumerate_possibility(net, factors, ev, v);
        auto got = query_marginal(calibrated, v);
        if (expect.empty()) {
          ++report.possibility_failures;
          continue;
        }
        for (std::size_t k = 0; k < expect.size(); ++k) {
          double err = std::abs(expect[k] - got[k]);
          report.max_possibility_error = std::max(report.max_possibility_error, err);
          if (!(err <= possibility_tolerance)) {
            ++report.possibility_failures;
            break;
          }
        }
      }
    } catch (const Error& e) {
      bool expected = e.kind() == ErrorKind::impossible_evidence &&
                      enumerate_possibility(net, factors, ev, 0).empty();
      if (!expected) ++report.possibility_failures;
    }
    auto t2 = clock::now();
    report.seconds_probability += std::chrono::duration<double>(t1 - t0).count();
    report.seconds_possibility += std::chrono::duration<double>(t2 - t1).count();
  }
  return report;
}

namespace {

std::vector<double> strictly_decreasing(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.001, 1.0);
  for (;;) {
    std::vector<double> p(n);
    for (auto& x : p) x = u(rng);
    double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= s;
    std::sort(p.begin(), p.end(), std::greater<>());
    if (std::adjacent_find(p.begin(), p.end()) == p.end()) return p;
  }
}

}  // namespace

std::string TransformOracleReport::summary(bool timing) const {
  std::ostringstream out;
  out << "distributions=" << distributions << " tail_sum_failures=" << tail_sum_failures
      << " max_error=" << max_error << " first_not_one=" << first_not_one
      << " extension_failures=" << extension_failures << " sandwich_violations=" << sandwich_violations
      << " sandwich_rounding_excess=" << sandwich_exact_violations;
  if (timing) out << " seconds=" << seconds;
  return out.str();
}

TransformOracleReport run_transform_oracles(std::uint64_t seed, std::size_t count, double tolerance) {
  auto t0 = std::chrono::steady_clock::now();
  TransformOracleReport report;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(1, 10);

  auto sandwich = [&](const std::vector<double>& p, const std::vector<double>& pi) {
    auto n = necessity(pi);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (n[i] > p[i] || p[i] > pi[i]) ++report.sandwich_exact_violations;
      if (n[i] > p[i] + tolerance || p[i] > pi[i] + tolerance) ++report.sandwich_violations;
    }
  };

  for (std::size_t trial = 0; trial < count; ++trial) {
    auto p = strictly_decreasing(rng, size(rng));
    auto pi = prob_to_poss(p);
    auto tail = tail_sum_possibility(p);
    ++report.distributions;
    bool bad = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double err = std::abs(pi[i] - tail[i]);
      report.max_error = std::max(report.max_error, err);
      bad = bad || !(err <= tolerance);
    }
    if (bad) ++report.tail_sum_failures;
    if (pi.front() != 1.0) ++report.first_not_one;
    sandwich(p, pi);
  }

  struct Case {
    std::vector<double> p, pi;
  };
  const Case cases[] = {{{0.4, 0.3, 0.3}, {1.0, 0.6, 0.6}},
                        {{0.3, 0.3, 0.4, 0.0}, {0.6, 0.6, 1.0, 0.0}},
                        {{0.5, 0.5}, {1.0, 1.0}},
                        {{0.7, 0.3, 0.0}, {1.0, 0.3, 0.0}},
                        {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}},
                        {{0.25, 0.25, 0.25, 0.25}, {1.0, 1.0, 1.0, 1.0}}};
  for (const auto& c : cases) {
    auto pi = prob_to_poss(c.p);
    auto tail = tail_sum_possibility(c.p);
    for (std::size_t i = 0; i < c.p.size(); ++i) {
      if (!(std::abs(pi[i] - c.pi[i]) <= tolerance) || !(std::abs(tail[i] - c.pi[i]) <= tolerance)) {
        ++report.extension_failures;
        break;
      }
    }
    sandwich(c.p, pi);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

DiscreteDataset sample_chain(std::mt19937_64& rng, std::size_t rows, double fidelity) {
  std::vector<Variable> vars;
  for (std::string name : {"A", "B", "C"}) vars.push_back({vars.size(), name, {"0", "1"}});
  DiscreteDataset data(vars);
  std::bernoulli_distribution coin(0.5), keep(fidelity);
  for (std::size_t r = 0; r < rows; ++r) {
    StateIndex a = coin(rng);
    StateIndex b = keep(rng) ? a : 1 - a;
    StateIndex c = keep(rng) ? b : 1 - b;
    data.add_row(std::vector<StateIndex>{a, b, c});
  }
  return data;
}

std::string K2OracleReport::summary(bool timing) const {
  std::ostringstream out;
  out << "score_checks=" << score_checks << " score_failures=" << score_failures
      << " max_relative_error=" << max_relative_error << " chain_recovered=" << chain_recovered << "/"
      << chain_datasets;
  if (timing) out << " seconds=" << seconds;
  return out.str();
}

K2OracleReport run_k2_oracles(std::uint64_t seed, std::size_t score_trials, std::size_t chain_datasets,
                              std::size_t chain_rows) {
  auto t0 = std::chrono::steady_clock::now();
  K2OracleReport report;
  std::mt19937_64 rng(seed);
  for (std::size_t trial = 0; trial < score_trials; ++trial) {
    std::size_t rows = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
    std::vector<Variable> vars;
    for (VarId c = 0; c < 3; ++c) {
      Variable v{c, "C" + std::to_string(c), {}};
      auto arity = std::uniform_int_distribution<std::size_t>(2, 3)(rng);
      for (std::size_t k = 0; k < arity; ++k) v.states.push_back(std::to_string(k));
      vars.push_back(std::move(v));
    }
    DiscreteDataset data(vars);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<StateIndex> row;
      for (const auto& v : vars) row.push_back(std::uniform_int_distribution<std::size_t>(0, v.arity() - 1)(rng));
      data.add_row(row);
    }
    for (VarId v = 0; v < 3; ++v) {
      std::vector<VarId> parents;
      for (VarId p = 0; p < 3; ++p) {
        if (p != v && rng() % 2) parents.push_back(p);
      }
      auto stats = count_statistics(data, v, parents);
      double direct = direct_k2_score(stats);
      double rel = std::abs(std::exp(k2_local_log_score(stats)) - direct) / direct;
      ++report.score_checks;
      report.max_relative_error = std::max(report.max_relative_error, rel);
      if (!(rel <= 1e-9)) ++report.score_failures;
    }
  }
  const std::vector<std::pair<VarId, VarId>> chain{{0, 1}, {1, 2}};
  for (std::size_t d = 0; d < chain_datasets; ++d) {
    std::mt19937_64 data_rng(seed + 1000 + d);
    auto data = sample_chain(data_rng, chain_rows);
    LearnConfig cfg = LearnConfig::identity(3, 2);
    auto edges = k2_search(data, cfg).edges();
    std::sort(edges.begin(), edges.end());
    ++report.chain_datasets;
    if (edges == chain) ++report.chain_recovered;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace hidpas::oracle
