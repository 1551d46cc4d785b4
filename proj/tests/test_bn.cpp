#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hidpas/bn.hpp"
#include "hidpas/oracle.hpp"
#include "test_nets.hpp"

using namespace hidpas;

TEST_CASE("validate_network accepts a well-formed two-node net") {
  CHECK(validate_network(testing::two_node_net()).empty());
}

TEST_CASE("validate_network reports the smallest cycle once") {
  Dag dag({testing::binary(0, "A"), testing::binary(1, "B")});
  dag.add_edge(0, 1);
  dag.add_edge(1, 0);
  std::vector<Cpt> cpts{{0, {1}, {{0.5, 0.5}, {0.5, 0.5}}}, {1, {0}, {{0.5, 0.5}, {0.5, 0.5}}}};
  auto report = validate_network(BayesNet(dag, cpts));
  int cycles = 0;
  for (const auto& v : report) cycles += v.kind == Violation::Kind::cycle;
  CHECK(cycles == 1);
  CHECK(report.size() == 1);
}

TEST_CASE("validate_network names a row that does not sum to one") {
  Dag dag({testing::binary(0, "A")});
  auto report = validate_network(BayesNet(dag, {{0, {}, {{0.5, 0.6}}}}));
  REQUIRE(report.size() == 1);
  CHECK(report[0].kind == Violation::Kind::row_sum);
  CHECK(report[0].variable == 0);
  CHECK(report[0].description.find("row 0") != std::string::npos);
  CHECK(report[0].description.find("1.1") != std::string::npos);
}

TEST_CASE("validate_network reports shape and range problems") {
  Dag dag({testing::binary(0, "A"), testing::binary(1, "B")});
  dag.add_edge(0, 1);
  std::vector<Cpt> cpts{{0, {}, {{1.2, -0.2}}}, {1, {0}, {{0.5, 0.5}}}};
  auto report = validate_network(BayesNet(dag, cpts));
  bool range = false, shape = false;
  for (const auto& v : report) {
    range |= v.kind == Violation::Kind::range && v.variable == 0;
    shape |= v.kind == Violation::Kind::shape && v.variable == 1;
  }
  CHECK(range);
  CHECK(shape);
}

TEST_CASE("parent_configurations enumerates row-major, last parent fastest") {
  Dag dag({testing::binary(0, "P1"), testing::ternary(1, "P2"), testing::binary(2, "X")});
  dag.add_edge(0, 2);
  dag.add_edge(1, 2);
  std::vector<Cpt> cpts{{0, {}, {{0.5, 0.5}}},
                        {1, {}, {{0.2, 0.3, 0.5}}},
                        {2, {0, 1}, std::vector<std::vector<double>>(6, {0.5, 0.5})}};
  BayesNet net(dag, cpts);
  CHECK(parent_configurations(net, 0) == std::vector<Configuration>{{}});
  std::vector<Configuration> six{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};
  CHECK(parent_configurations(net, 2) == six);
  CHECK(parent_configurations(net, 2) == parent_configurations(net, 2));
  CHECK_THROWS_AS(parent_configurations(net, 7), Error);

  auto two = testing::two_node_net();
  CHECK(parent_configurations(two, 1) == std::vector<Configuration>{{0}, {1}});
}

TEST_CASE("joint_probability multiplies the selected CPT entries") {
  auto net = testing::two_node_net();
  std::vector<StateIndex> a{1, 1};
  CHECK(joint_probability(net, a) == doctest::Approx(0.54).epsilon(1e-15));

  Dag dag({testing::binary(0, "R")});
  BayesNet root(dag, {{0, {}, {{0.3, 0.7}}}});
  std::vector<StateIndex> one{1};
  CHECK(joint_probability(root, one) == doctest::Approx(0.7));

  BayesNet zero(Dag({testing::binary(0, "Z")}), {{0, {}, {{1.0, 0.0}}}});
  CHECK(joint_probability(zero, one) == 0.0);

  std::vector<StateIndex> partial{1};
  CHECK_THROWS_AS(joint_probability(net, partial), Error);
}

TEST_CASE("joint probabilities of valid random nets sum to one") {
  std::mt19937_64 rng(7);
  oracle::RandomNetOptions opts;
  opts.max_variables = 6;
  for (int trial = 0; trial < 50; ++trial) {
    auto net = oracle::random_network(rng, opts);
    REQUIRE(validate_network(net).empty());
    double total = 0.0;
    std::vector<StateIndex> a(net.size(), 0);
    while (true) {
      total += joint_probability(net, a);
      std::size_t i = net.size();
      while (i-- > 0) {
        if (++a[i] < net.variable(i).arity()) break;
        a[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("evidence is checked against variables and arities") {
  auto net = testing::two_node_net();
  CHECK_NOTHROW(check_evidence(net.dag(), {{1, 1}}));
  CHECK_THROWS_AS(check_evidence(net.dag(), {{1, 2}}), Error);
  CHECK_THROWS_AS(check_evidence(net.dag(), {{5, 0}}), Error);
}

TEST_CASE("model text format round-trips networks and extra sections") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = oracle::random_network(rng);
    ModelFile model{net, {{"kind", "test"}, {"tau", "0.5"}}, {"col mean=1.5"}};
    std::ostringstream out;
    write_model(out, model);
    std::istringstream in(out.str());
    auto back = read_model(in);
    CHECK(back.meta == model.meta);
    CHECK(back.rules == model.rules);
    CHECK(back.net.dag().edges() == net.dag().edges());
    for (VarId v = 0; v < net.size(); ++v) {
      CHECK(back.net.variable(v).states == net.variable(v).states);
      for (std::size_t j = 0; j < net.cpt(v).rows.size(); ++j) {
        for (std::size_t k = 0; k < net.cpt(v).rows[j].size(); ++k) {
          CHECK(std::abs(back.net.cpt(v).rows[j][k] - net.cpt(v).rows[j][k]) < 1e-11);
        }
      }
    }
    // Writing the reloaded model reproduces the text byte for byte.
    std::ostringstream again;
    write_model(again, back);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("model text format layout") {
  auto text = to_text(testing::two_node_net());
  CHECK(text ==
        "HIDPAS-BN v1\n"
        "VARIABLES\n"
        "0 A a0,a1\n"
        "1 B b0,b1\n"
        "EDGES\n"
        "0 -> 1\n"
        "CPT 0\n"
        "() : 0.4 0.6\n"
        "CPT 1\n"
        "(0) : 0.8 0.2\n"
        "(1) : 0.1 0.9\n");
}

TEST_CASE("model reader rejects malformed input with a line number") {
  CHECK_THROWS_AS(network_from_text("HIDPAS-BN v2\n"), Error);
  try {
    network_from_text("HIDPAS-BN v1\nVARIABLES\n0 A a0,a1\nCPT 0\n() : 0.5 zz\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
  CHECK_THROWS_AS(network_from_text("HIDPAS-BN v1\nVARIABLES\n0 A a0,a1\n"), Error);
  // comments and blank lines are ignored
  auto net = network_from_text("# header\nHIDPAS-BN v1\n\nVARIABLES\n0 A a0,a1\n# c\nCPT 0\n() : 0.25 0.75\n");
  CHECK(net.cpt(0).rows[0][1] == 0.75);
}
