#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hidpas/features.hpp"
#include "kdd_fixture.hpp"

using namespace hidpas;

namespace {

RawTable small_table(std::vector<std::string> cls, std::vector<std::string> cat,
                     std::vector<double> num) {
  RawTable t;
  t.add_column({"cat", false, {}, std::move(cat)});
  t.add_column({"num", true, std::move(num), {}});
  t.add_column({"class", false, {}, std::move(cls)});
  return t;
}

double gain_of(const FeatureRanking& r, const std::string& name) {
  for (const auto& s : r) {
    if (s.column == name) return s.gain;
  }
  FAIL("missing feature " << name);
  return -1;
}

}  // namespace

TEST_CASE("load_kdd shape, label dot and numeric parsing") {
  std::istringstream in(testing::kdd_line("tcp", "http", "SF", 5, 100, "normal.") + "\n" +
                        testing::kdd_line("icmp", "ecr_i", "SF", 500, 1032, "smurf.") + "\n");
  auto t = load_kdd(in);
  CHECK(t.columns().size() == 42);
  CHECK(t.rows() == 2);
  CHECK(t.column("attack_type").strings == std::vector<std::string>{"normal", "smurf"});
  CHECK(t.column("count").numbers == std::vector<double>{5, 500});
  CHECK(t.column("protocol_type").strings[1] == "icmp");
  CHECK_FALSE(t.column("protocol_type").numeric);
  CHECK(t.column("src_bytes").numeric);
}

TEST_CASE("load_kdd reports malformed lines") {
  std::string good = testing::kdd_line("tcp", "http", "SF", 5, 100, "normal.");
  std::string short_row = good.substr(0, good.rfind(','));
  short_row = short_row.substr(0, short_row.rfind(',')) + ",normal.";  // 41 fields
  std::string text = good + "\n" + short_row + "\n" + good + "\n";
  {
    std::istringstream in(text);
    try {
      load_kdd(in);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  std::istringstream in(text);
  LoadReport report;
  auto t = load_kdd(in, MalformedRows::skip, &report);
  CHECK(t.rows() == 2);
  CHECK(report.skipped == 1);
  CHECK(report.problems.at(0).find("line 2") != std::string::npos);

  std::string bad_number = good;
  bad_number.replace(0, 1, "x");
  std::istringstream in2(bad_number + "\n");
  CHECK_THROWS_AS(load_kdd(in2), Error);
}

TEST_CASE("attack categories") {
  CHECK(attack_category("smurf") == "dos");
  CHECK(attack_category("normal") == "normal");
  CHECK(attack_category("portsweep") == "probe");
  CHECK(attack_category("guess_passwd") == "r2l");
  CHECK(attack_category("rootkit") == "u2r");
  CHECK(attack_category("mystery") == "mystery");
}

TEST_CASE("gini_rank examples") {
  auto t = small_table({"a", "a", "b", "b"}, {"x", "x", "y", "y"}, {7, 7, 7, 7});
  auto r = gini_rank(t, "class");
  CHECK(gain_of(r, "cat") == doctest::Approx(0.5));
  CHECK(gain_of(r, "num") == 0.0);
  CHECK(r.front().column == "cat");

  RawTable self;
  self.add_column({"c", false, {}, {"a", "b", "c", "a"}});
  self.add_column({"copy", false, {}, {"a", "b", "c", "a"}});
  double g = gini_rank(self, "c").at(0).gain;
  std::vector<std::size_t> counts{2, 1, 1};
  CHECK(g == doctest::Approx(gini_impurity(counts)));

  auto constant = small_table({"a", "a", "a"}, {"x", "y", "z"}, {1, 2, 3});
  for (const auto& s : gini_rank(constant, "class")) CHECK(s.gain == 0.0);
}

TEST_CASE("gini_rank ties keep table order, numeric columns use a mean split") {
  auto t = small_table({"a", "a", "b", "b"}, {"x", "x", "y", "y"}, {1, 2, 10, 11});
  auto r = gini_rank(t, "class");
  CHECK(r[0].column == "cat");
  CHECK(r[1].column == "num");
  CHECK(r[1].gain == doctest::Approx(0.5));
}

TEST_CASE("gini_rank is invariant to row order and bounded by the class impurity") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> cls, cat;
    std::vector<double> num;
    for (int i = 0; i < 30; ++i) {
      cls.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
      cat.push_back(std::string(1, static_cast<char>('p' + rng() % 4)));
      num.push_back(static_cast<double>(rng() % 100));
    }
    auto base = gini_rank(small_table(cls, cat, num), "class");
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> cls2, cat2;
    std::vector<double> num2;
    for (auto i : perm) {
      cls2.push_back(cls[i]);
      cat2.push_back(cat[i]);
      num2.push_back(num[i]);
    }
    auto shuffled = gini_rank(small_table(cls2, cat2, num2), "class");
    std::map<std::string, std::size_t> counts;
    for (const auto& c : cls) ++counts[c];
    std::vector<std::size_t> cv;
    for (auto& [k, v] : counts) cv.push_back(v);
    for (const auto& s : base) {
      CHECK(gain_of(shuffled, s.column) == doctest::Approx(s.gain).epsilon(1e-12));
      CHECK(s.gain >= 0.0);
      CHECK(s.gain <= gini_impurity(cv) + 1e-12);
    }
  }
}

TEST_CASE("mean_discretize examples") {
  auto d = mean_discretize("x", std::vector<double>{1, 2, 3, 6});
  CHECK(d.rule.threshold == 3.0);
  CHECK(d.bins == std::vector<std::string>{"v1", "v1", "v2", "v2"});
  auto one = mean_discretize("x", std::vector<double>{5});
  CHECK(one.rule.threshold == 5.0);
  CHECK(one.bins == std::vector<std::string>{"v2"});
  CHECK(one.degenerate);
  CHECK_THROWS_AS(mean_discretize("x", std::vector<double>{}), Error);
}

TEST_CASE("select_features") {
  FeatureRanking r{{"a", 0.5}, {"b", 0.3}, {"c", 0.0}};
  CHECK(select_features(r, 3, "y") == std::vector<std::string>{"a", "b", "c", "y"});
  CHECK(select_features(r, 1, "y") == std::vector<std::string>{"a", "y"});
  CHECK(select_features(r, 0, "y") == std::vector<std::string>{"y"});
  CHECK_THROWS_AS(select_features(r, 4, "y"), Error);
}

TEST_CASE("to_discrete_dataset and the unknown state") {
  auto train = small_table({"a", "b", "a"}, {"udp", "tcp", "tcp"}, {1, 2, 6});
  std::vector<std::string> cols{"cat", "num", "class"};
  auto rules = fit_rules(train, cols);
  auto d = to_discrete_dataset(train, rules, cols, false, "class");
  CHECK(d.columns()[0].states == std::vector<std::string>{"tcp", "udp"});
  CHECK(d.columns()[1].states == std::vector<std::string>{"v1", "v2"});
  CHECK(d.columns()[2].states == std::vector<std::string>{"a", "b"});
  CHECK(d.cell(0, 0) == 1);
  CHECK(d.cell(2, 1) == 1);

  auto with_unknown = to_discrete_dataset(train, rules, cols, true, "class");
  CHECK(with_unknown.columns()[0].states.back() == kUnknownState);
  CHECK(with_unknown.columns()[2].states.size() == 2);

  auto held_out = small_table({"a"}, {"ntp_u"}, {100});
  auto h = to_discrete_dataset(held_out, rules, cols, true, "class");
  CHECK(h.columns()[0].states[h.cell(0, 0)] == kUnknownState);
  CHECK_THROWS_AS(to_discrete_dataset(held_out, rules, cols, false, "class"), Error);

  // Applying the frozen rules again reproduces the same indices.
  auto again = to_discrete_dataset(train, rules, cols, false, "class");
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.width(); ++c) CHECK(again.cell(r, c) == d.cell(r, c));
  }
}

TEST_CASE("rules round-trip through text lines") {
  auto train = small_table({"a", "b", "a"}, {"udp", "tcp", "tcp"}, {1.25, 2, 0.1});
  std::vector<std::string> cols{"cat", "num", "class"};
  auto rules = fit_rules(train, cols);
  auto lines = rules.to_lines();
  CHECK(lines[0] == "num mean=1.1166666666666667");
  CHECK(lines[1] == "cat states=tcp,udp");
  auto back = FeatureRules::from_lines(lines);
  CHECK(back.numeric[0].threshold == rules.numeric[0].threshold);
  CHECK(back.to_lines() == lines);
  auto a = to_discrete_dataset(train, rules, cols, true, "class");
  auto b = to_discrete_dataset(train, back, cols, true, "class");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.width(); ++c) CHECK(a.cell(r, c) == b.cell(r, c));
  }
  std::vector<std::string> bad{"x nonsense"};
  CHECK_THROWS_AS(FeatureRules::from_lines(bad), Error);
}
