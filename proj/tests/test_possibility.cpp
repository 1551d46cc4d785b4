#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hidpas/oracle.hpp"
#include "hidpas/possibility.hpp"
#include "test_nets.hpp"

using namespace hidpas;

namespace {

void check_close(const std::vector<double>& got, const std::vector<double>& expect, double tol) {
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got[i] - expect[i]) <= tol);
  }
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.001, 1.0);
  std::vector<double> p(n);
  for (auto& x : p) x = u(rng);
  double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace

TEST_CASE("prob_to_poss worked examples") {
  check_close(prob_to_poss(std::vector<double>{0.5, 0.3, 0.2}), {1.0, 0.5, 0.2}, 1e-12);
  check_close(prob_to_poss(std::vector<double>{0.5, 0.5}), {1.0, 1.0}, 1e-12);
  CHECK(prob_to_poss(std::vector<double>{1.0, 0.0, 0.0}) == std::vector<double>{1.0, 0.0, 0.0});
  check_close(prob_to_poss(std::vector<double>{0.2, 0.5, 0.3}), {0.2, 1.0, 0.5}, 1e-12);
  CHECK(prob_to_poss(std::vector<double>{1.0}) == std::vector<double>{1.0});
}

TEST_CASE("prob_to_poss ties and zeros") {
  auto pi = prob_to_poss(std::vector<double>{0.3, 0.3, 0.4, 0.0});
  CHECK(pi[0] == pi[1]);
  CHECK(pi[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(pi[2] == 1.0);
  CHECK(pi[3] == 0.0);

  // Below the zero guard a probability counts as impossible.
  auto tiny = prob_to_poss(std::vector<double>{1.0 - 1e-13, 1e-13});
  CHECK(tiny[1] == 0.0);
}

TEST_CASE("prob_to_poss rejects invalid input") {
  CHECK_THROWS_AS(prob_to_poss(std::vector<double>{0.5, 0.4}), Error);
  CHECK_THROWS_AS(prob_to_poss(std::vector<double>{1.2, -0.2}), Error);
  CHECK_THROWS_AS(prob_to_poss(std::vector<double>{}), Error);
}

TEST_CASE("necessity examples") {
  check_close(necessity(std::vector<double>{1.0, 0.5, 0.2}), {0.5, 0.0, 0.0}, 1e-15);
  CHECK(necessity(std::vector<double>{1.0, 1.0}) == std::vector<double>{0.0, 0.0});
  CHECK(necessity(std::vector<double>{1.0, 0.0, 0.0}) == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("is_informative") {
  CHECK(is_informative({0.5, 0.62, 0.62}, 0.5));
  CHECK_FALSE(is_informative({0.2, 0.5, 0.9}, 0.5));
  CHECK(is_informative({1.0, 1.0, 1.0}, 0.0));
  CHECK(is_informative({0.0, 0.3, 1.0}, 1.0));
}

TEST_CASE("tail-sum identity on 1000 random distributions") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = random_distribution(rng, 2 + trial % 7);
    auto pi = prob_to_poss(p);
    auto tail = oracle::tail_sum_possibility(p);
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(pi[i] - tail[i]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("transformation sandwich and order preservation") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    auto p = random_distribution(rng, 2 + trial % 5);
    if (trial % 3 == 0) p[trial % p.size()] = p[(trial + 1) % p.size()];
    double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= s;
    auto pi = prob_to_poss(p);
    auto n = necessity(pi);
    CHECK(*std::max_element(pi.begin(), pi.end()) == 1.0);
    for (std::size_t a = 0; a < p.size(); ++a) {
      CHECK(n[a] <= p[a] + 1e-12);
      CHECK(p[a] <= pi[a] + 1e-12);
      for (std::size_t b = 0; b < p.size(); ++b) {
        if (p[a] > p[b]) CHECK(pi[a] >= pi[b]);
        if (p[a] == p[b]) CHECK(pi[a] == pi[b]);
      }
    }
  }
}

TEST_CASE("hybrid propagation on A -> B") {
  auto net = testing::two_node_net();
  auto factors = possibilistic_potentials(net);
  check_close(factors[0].table(), {0.4, 1.0}, 1e-12);
  check_close(factors[1].table(), {1.0, 0.2, 0.1, 1.0}, 1e-12);

  std::vector<VarId> target{1};
  auto m = hybrid_propagate(net, {}, target).at(0);
  check_close(m.probability, {0.38, 0.62}, 1e-12);
  auto expect_pi = oracle::enumerate_possibility(net, factors, {}, 1);
  check_close(m.possibility, expect_pi, 1e-12);
  check_close(m.possibility, {0.4, 1.0}, 1e-12);
  check_close(m.necessity, {0.0, 0.6}, 1e-12);
  CHECK(measure_sandwich(m).violations == 0);

  HybridEngine engine(net);
  auto post = engine.query({{1, 1}}, 0);
  CHECK(post.probability[1] == doctest::Approx(0.54 / 0.62).epsilon(1e-12));
  check_close(post.possibility, oracle::enumerate_possibility(net, factors, {{1, 1}}, 0), 1e-12);
}

TEST_CASE("hybrid propagation on a single root") {
  Dag dag({testing::ternary(0, "R")});
  BayesNet net(dag, {{0, {}, {{0.5, 0.3, 0.2}}}});
  std::vector<VarId> target{0};
  auto m = hybrid_propagate(net, {}, target).at(0);
  check_close(m.necessity, {0.5, 0.0, 0.0}, 1e-12);
  check_close(m.probability, {0.5, 0.3, 0.2}, 1e-12);
  check_close(m.possibility, {1.0, 0.5, 0.2}, 1e-12);
  auto report = measure_sandwich(m);
  CHECK(report.states == 3);
  CHECK(report.violations == 0);
}

TEST_CASE("degenerate net gives crisp triples") {
  Dag dag({testing::binary(0, "A"), testing::binary(1, "B")});
  dag.add_edge(0, 1);
  BayesNet net(dag, {{0, {}, {{0.0, 1.0}}}, {1, {0}, {{1.0, 0.0}, {0.0, 1.0}}}});
  std::vector<VarId> both{0, 1};
  for (const Evidence& ev : {Evidence{}, Evidence{{1, 1}}, Evidence{{0, 1}}}) {
    for (const auto& m : hybrid_propagate(net, ev, both)) {
      auto t0 = m.triple(0);
      auto t1 = m.triple(1);
      CHECK(t0.necessity == 0.0);
      CHECK(t0.probability == 0.0);
      CHECK(t0.possibility == 0.0);
      CHECK(t1.necessity == 1.0);
      CHECK(t1.probability == 1.0);
      CHECK(t1.possibility == 1.0);
    }
  }
  try {
    hybrid_propagate(net, {{0, 0}}, both);
    FAIL("expected impossible evidence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::impossible_evidence);
  }
}

TEST_CASE("hybrid P equals plain propagation bit for bit; marginal invariants hold") {
  std::mt19937_64 rng(314);
  SandwichReport overall;
  for (int trial = 0; trial < 80; ++trial) {
    auto net = oracle::random_network(rng);
    auto ev = oracle::random_evidence(rng, net, 2);
    if (oracle::enumerate_marginal(net, ev, 0).empty()) continue;
    HybridEngine engine(net);
    for (VarId v = 0; v < net.size(); ++v) {
      auto m = engine.query(ev, v);
      CHECK(m.probability == engine.probability(ev, v));
      double psum = std::accumulate(m.probability.begin(), m.probability.end(), 0.0);
      CHECK(std::abs(psum - 1.0) <= 1e-9);
      CHECK(*std::max_element(m.possibility.begin(), m.possibility.end()) == 1.0);
      CHECK(m.necessity == necessity(m.possibility));
      for (std::size_t k = 0; k < m.arity(); ++k) {
        CHECK(m.necessity[k] >= 0.0);
        CHECK(m.necessity[k] <= m.possibility[k]);
        CHECK(m.possibility[k] <= 1.0);
      }
      overall.merge(measure_sandwich(m));
    }
  }
  // The post-propagation sandwich is only measured.
  MESSAGE("sandwich states=" << overall.states << " violations=" << overall.violations
                             << " max=" << overall.max_violation);
  CHECK(overall.states > 0);
}

TEST_CASE("transform oracle suite") {
  auto report = oracle::run_transform_oracles(11, 1000);
  INFO(report.summary());
  CHECK(report.ok());
  CHECK(report.distributions == 1000);
  MESSAGE(report.summary());
}
