#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hidpas/oracle.hpp"
#include "hidpas/prediction.hpp"

using namespace hidpas;

namespace {

AlertRecord alert(double t, const std::string& type, const std::string& src = "10.0.0.1",
                  const std::string& dport = "80", const std::string& sensor = "s1") {
  return {t, sensor, src, "1025", "10.0.0.9", dport, type};
}

HyperAlert hyper(const std::string& name, std::vector<double> times) {
  HyperAlert h;
  h.name = name;
  for (std::size_t i = 0; i < times.size(); ++i) h.members.push_back(i);
  h.timestamps = std::move(times);
  return h;
}

std::string model_text(const ModelFile& file) {
  std::ostringstream out;
  write_model(out, file);
  return out.str();
}

/// scan and exploit share slots 0,2,4,...; noise lives in slots 0..3 mod 4.
std::vector<HyperAlert> correlated_plan_input() {
  std::vector<double> scan, exploit, noise;
  for (int i = 0; i < 40; ++i) {
    if (i % 2 == 0) {
      scan.push_back(i + 0.2);
      exploit.push_back(i + 0.7);
    }
    if (i % 4 < 2) noise.push_back(i + 0.5);
  }
  return {hyper("scan", scan), hyper("exploit", exploit), hyper("noise", noise)};
}

PlanModel correlated_plan(double tau = kDefaultTau) {
  PlanConfig cfg;
  cfg.tau = tau;
  return train_plan_model(build_transactions(correlated_plan_input(), 1.0), cfg);
}

}  // namespace

TEST_CASE("alert log reads, writes and reports malformed rows") {
  std::vector<AlertRecord> log{alert(1.5, "scan"), alert(2, "exploit", "10.0.0.2", "22")};
  std::ostringstream out;
  write_alert_log(out, log);
  std::istringstream in(out.str());
  auto back = read_alert_log(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].timestamp == 1.5);
  CHECK(back[1].dst_port == "22");
  CHECK(back[1].attack_type == "exploit");

  std::istringstream no_header("1,s,a,b,c,d,e\n");
  CHECK_THROWS_AS(read_alert_log(no_header), Error);
  std::istringstream bad(std::string(kAlertLogHeader) + "\n1,s,a,b,c,d\n");
  try {
    read_alert_log(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream bad_time(std::string(kAlertLogHeader) + "\nnoon,s,a,b,c,d,e\n");
  CHECK_THROWS_AS(read_alert_log(bad_time), Error);
}

TEST_CASE("aggregation of identical alerts gives one hyper-alert") {
  std::vector<AlertRecord> log{alert(1, "scan"), alert(5, "scan"), alert(9, "scan")};
  auto agg = aggregate_alerts(log);
  REQUIRE(agg.hyper_alerts.size() == 1);
  CHECK(agg.phase_one_count == 1);
  CHECK(agg.hyper_alerts[0].size() == 3);
  CHECK(agg.hyper_alerts[0].earliest() == 1);
  CHECK(agg.hyper_alerts[0].name == "scan");
  CHECK(agg.hyper_alerts[0].id == 1);

  auto empty = aggregate_alerts({});
  CHECK(empty.hyper_alerts.empty());
  CHECK(empty.assignment.empty());
}

TEST_CASE("phase two merges by the chosen key") {
  std::vector<AlertRecord> log{alert(1, "scan", "10.0.0.1"), alert(2, "scan", "10.0.0.2"),
                               alert(3, "exploit", "10.0.0.1")};
  auto by_type = aggregate_alerts(log, MergeKey::attack_type);
  CHECK(by_type.phase_one_count == 3);
  REQUIRE(by_type.hyper_alerts.size() == 2);
  CHECK(by_type.hyper_alerts[0].name == "scan");
  CHECK(by_type.hyper_alerts[0].size() == 2);

  auto by_src = aggregate_alerts(log, MergeKey::src_ip);
  REQUIRE(by_src.hyper_alerts.size() == 2);
  CHECK(by_src.hyper_alerts[0].name == "10.0.0.1");
  CHECK(by_src.hyper_alerts[0].members == std::vector<std::size_t>{0, 2});

  auto phase_one = aggregate_alerts(log, MergeKey::none);
  REQUIRE(phase_one.hyper_alerts.size() == 3);
  CHECK(phase_one.hyper_alerts[2].name == "exploit#3");

  CHECK(parse_merge_key("dst_port") == MergeKey::dst_port);
  CHECK_FALSE(parse_merge_key("colour").has_value());
}

TEST_CASE("aggregation partitions the log") {
  std::mt19937_64 rng(7);
  std::vector<std::string> types{"a", "b", "c"}, srcs{"x", "y"}, ports{"1", "2", "3"};
  std::vector<AlertRecord> log;
  for (int i = 0; i < 200; ++i) {
    log.push_back(alert(i, types[rng() % 3], srcs[rng() % 2], ports[rng() % 3]));
  }
  for (MergeKey key : {MergeKey::none, MergeKey::attack_type, MergeKey::src_ip, MergeKey::dst_port}) {
    auto agg = aggregate_alerts(log, key);
    std::vector<int> seen(log.size(), 0);
    for (std::size_t h = 0; h < agg.hyper_alerts.size(); ++h) {
      for (auto m : agg.hyper_alerts[h].members) {
        ++seen[m];
        CHECK(agg.assignment[m] == h);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));
    CHECK(agg.hyper_alerts.size() <= agg.phase_one_count);
  }
}

TEST_CASE("alert classifier reproduces hyper-alert labels") {
  std::vector<AlertRecord> log;
  for (int i = 0; i < 10; ++i) {
    log.push_back(alert(i, "scan", "10.0.0." + std::to_string(i % 3)));
    log.push_back(alert(i + 0.5, "exploit", "10.0.0.7", "443"));
  }
  auto agg = aggregate_alerts(log);
  std::vector<std::string> labels;
  for (auto h : agg.assignment) labels.push_back(agg.hyper_alerts[h].name);

  auto a = train_alert_classifier(log, labels);
  auto b = train_alert_classifier(log, labels);
  CHECK(model_text(a.to_model_file()) == model_text(b.to_model_file()));
  for (std::size_t i = 0; i < log.size(); ++i) CHECK(classify_alert(a, log[i]).label == labels[i]);

  AlertRecord partial{0, "", "", "", "", "", "exploit"};
  CHECK(classify_alert(a, partial).label == "exploit");

  auto path = std::filesystem::temp_directory_path() / "hidpas_test_classifier.bn";
  a.save(path.string());
  auto back = AlertClassifier::load(path.string());
  CHECK(model_text(back.to_model_file()) == model_text(a.to_model_file()));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(train_alert_classifier(log, std::vector<std::string>{"x"}), Error);
}

TEST_CASE("single hyper-alert classifier always answers it") {
  std::vector<AlertRecord> log{alert(1, "scan"), alert(2, "scan", "10.0.0.5")};
  std::vector<std::string> labels{"scan", "scan"};
  auto c = train_alert_classifier(log, labels);
  CHECK(c.network().variable(c.class_variable()).arity() == 1);
  auto r = classify_alert(c, alert(3, "other", "1.2.3.4", "9999"));
  CHECK(r.label == "scan");
  CHECK(r.marginal.probability[0] == 1.0);
}

TEST_CASE("classifier learns a port dependence and tolerates unseen ports") {
  std::vector<AlertRecord> log;
  std::vector<std::string> labels;
  for (int i = 0; i < 12; ++i) {
    log.push_back(alert(i, "probe", "10.0.0.1", "22"));
    labels.push_back("ssh_probe");
    log.push_back(alert(i, "probe", "10.0.0.1", "80"));
    labels.push_back("web_probe");
  }
  auto c = train_alert_classifier(log, labels);
  auto port = c.network().dag().find("dst_port");
  REQUIRE(port.has_value());
  const auto& dag = c.network().dag();
  CHECK((dag.has_edge(c.class_variable(), *port) || dag.has_edge(*port, c.class_variable())));
  CHECK(classify_alert(c, alert(1, "probe", "10.0.0.1", "22")).label == "ssh_probe");
  CHECK(classify_alert(c, alert(1, "probe", "10.0.0.1", "80")).label == "web_probe");

  auto unseen = classify_alert(c, alert(1, "probe", "10.0.0.1", "8080"));
  CHECK_FALSE(unseen.impossible_evidence);
  CHECK(unseen.marginal.arity() == 2);
}

TEST_CASE("transactions cover the range in fixed slots") {
  std::vector<HyperAlert> hs{hyper("a", {0, 1.9, 2, 9.99}), hyper("b", {4, 10, 11})};
  auto tm = build_transactions(hs, 2.0, 0.0, 10.0);
  CHECK(tm.slots == 5);
  CHECK(tm.occurrences[0] == std::vector<std::uint8_t>{1, 1, 0, 0, 1});
  CHECK(tm.occurrences[1] == std::vector<std::uint8_t>{0, 0, 1, 0, 0});
  CHECK(tm.ignored == 2);

  auto defaults = build_transactions(hs, 2.0);
  CHECK(defaults.start == 0.0);
  CHECK(defaults.slots == 6);
  CHECK(defaults.range == 12.0);
  CHECK(defaults.ignored == 0);
  CHECK(defaults.earliest == std::vector<double>{0, 4});

  auto data = transactions_dataset(tm);
  CHECK(data.rows() == 5);
  CHECK(data.width() == 2);
  CHECK(data.columns()[0].states == std::vector<std::string>{kAbsent, kPresent});

  CHECK_THROWS_AS(build_transactions(hs, 0.0), Error);
  CHECK_THROWS_AS(build_transactions(hs, 2.0, 0.0, 1.0), Error);
}

TEST_CASE("order of alerts within a slot does not matter") {
  auto a = build_transactions(std::vector<HyperAlert>{hyper("x", {0.1, 0.9, 3.5})}, 1.0);
  auto b = build_transactions(std::vector<HyperAlert>{hyper("x", {0.9, 0.1, 3.5})}, 1.0);
  CHECK(a.occurrences == b.occurrences);
  auto ma = train_plan_model(build_transactions(correlated_plan_input(), 1.0));
  auto shuffled = correlated_plan_input();
  std::reverse(shuffled[0].timestamps.begin(), shuffled[0].timestamps.end());
  auto mb = train_plan_model(build_transactions(shuffled, 1.0));
  CHECK(model_text(ma.to_model_file()) == model_text(mb.to_model_file()));
}

TEST_CASE("plan model links perfectly correlated hyper-alerts") {
  auto model = correlated_plan();
  const auto& dag = model.network().dag();
  CHECK(dag.has_edge(*model.find("scan"), *model.find("exploit")));
  CHECK_FALSE(dag.has_edge(*model.find("scan"), *model.find("noise")));

  auto path = std::filesystem::temp_directory_path() / "hidpas_test_plan.bn";
  model.save(path.string());
  auto back = PlanModel::load(path.string());
  CHECK(model_text(back.to_model_file()) == model_text(model.to_model_file()));
  std::filesystem::remove(path);
}

TEST_CASE("all-zero column and a single slot") {
  std::vector<HyperAlert> hs{hyper("a", {0, 2, 4}), hyper("never", {100})};
  auto tm = build_transactions(hs, 1.0, 0.0, 6.0);
  CHECK(std::all_of(tm.occurrences[1].begin(), tm.occurrences[1].end(), [](auto v) { return v == 0; }));
  auto model = train_plan_model(tm);
  auto m = model.engine().probability({}, *model.find("never"));
  CHECK(m[1] == doctest::Approx(1.0 / 8.0));

  auto single = build_transactions(std::vector<HyperAlert>{hyper("a", {0.5}), hyper("b", {0.7})}, 1.0);
  CHECK(single.slots == 1);
  CHECK(train_plan_model(single).network().dag().edges().empty());
}

TEST_CASE("explicit plan order must name hyper-alerts") {
  PlanConfig cfg;
  cfg.order = {"exploit", "missing"};
  CHECK_THROWS_AS(train_plan_model(build_transactions(correlated_plan_input(), 1.0), cfg), Error);
}

TEST_CASE("observing a step raises the probability of its successor") {
  auto model = correlated_plan();
  SelectionRule rule;
  auto prior = predict_attacks(model, {}, rule);
  CHECK(prior.rows.size() == 3);
  CHECK(prior.observed.empty());

  std::vector<std::string> seen{"scan"};
  auto after = predict_attacks(model, seen, rule);
  REQUIRE(after.rows.size() == 2);
  CHECK(after.rows[0].name == "exploit");
  CHECK(after.rows[0].triple.probability > prior.rows[1].triple.probability);
  CHECK(after.rows[0].triple.probability > 0.9);
  CHECK(after.rows[0].selected);
  CHECK(after.ranked == std::vector<std::string>{"exploit"});
  for (const auto& row : after.rows) {
    CHECK(row.triple.necessity <= row.triple.probability + 1e-12);
    CHECK(row.triple.probability <= row.triple.possibility + 1e-12);
  }

  auto text = format_prediction_report(after);
  CHECK(text.find("hyper_alert  N  P  Π  informative  selected") != std::string::npos);
  CHECK(text.find("predicted: exploit") != std::string::npos);

  std::vector<std::string> unknown{"teleport"};
  CHECK_THROWS_AS(predict_attacks(model, unknown, rule), Error);
}

TEST_CASE("observing everything leaves nothing to predict") {
  auto model = correlated_plan();
  std::vector<std::string> all{"scan", "exploit", "noise", "scan"};
  auto r = predict_attacks(model, all, {});
  CHECK(r.rows.empty());
  CHECK(r.ranked.empty());
  CHECK(r.observed.size() == 3);
}

TEST_CASE("threshold selection extremes") {
  auto model = correlated_plan(1.0);
  std::vector<std::string> seen{"noise"};
  SelectionRule all{SelectionRule::Kind::threshold, 0.0};
  auto r = predict_attacks(model, seen, all);
  CHECK(r.ranked.size() == r.rows.size());
  for (std::size_t i = 1; i < r.ranked.size(); ++i) {
    auto p = [&](const std::string& n) {
      return std::find_if(r.rows.begin(), r.rows.end(), [&](auto& row) { return row.name == n; })
          ->triple.probability;
    };
    CHECK(p(r.ranked[i - 1]) >= p(r.ranked[i]));
  }
  SelectionRule none{SelectionRule::Kind::threshold, 1.5};
  CHECK(predict_attacks(model, seen, none).ranked.empty());
}

TEST_CASE("correlation edges agree with enumeration on a chain") {
  Dag dag({{0, "a", {kAbsent, kPresent}}, {1, "b", {kAbsent, kPresent}}, {2, "c", {kAbsent, kPresent}}});
  dag.add_edge(0, 1);
  dag.add_edge(1, 2);
  BayesNet net(dag, {{0, {}, {{0.7, 0.3}}},
                     {1, {0}, {{0.9, 0.1}, {0.2, 0.8}}},
                     {2, {1}, {{0.6, 0.4}, {0.25, 0.75}}}});
  PlanModel model(net, kDefaultTau);
  auto edges = correlation_edges(model);
  REQUIRE(edges.size() == 2);
  auto factors = possibilistic_potentials(net);
  for (const auto& e : edges) {
    VarId from = *model.find(e.from), to = *model.find(e.to);
    auto p = oracle::enumerate_marginal(net, {{from, 1}}, to);
    auto poss = oracle::enumerate_possibility(net, factors, {{from, 1}}, to);
    CHECK(e.strength.probability == doctest::Approx(p[1]).epsilon(1e-12));
    CHECK(e.strength.possibility == doctest::Approx(poss[1]).epsilon(1e-12));
    CHECK(e.strength.necessity == doctest::Approx(1.0 - poss[0]).epsilon(1e-12));
  }
  CHECK(edges[0].strength.probability == doctest::Approx(0.8));
}
