#include "hidpas/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "hidpas/error.hpp"
#include "hidpas/log.hpp"
#include "hidpas/text.hpp"

namespace hidpas {

void RawTable::add_column(Column column) {
  if (index_of(column.name)) fail(ErrorKind::invalid_argument, "duplicate column '" + column.name + "'");
  if (!columns_.empty() && column.size() != rows()) {
    fail(ErrorKind::invalid_argument, "column '" + column.name + "' has the wrong length");
  }
  columns_.push_back(std::move(column));
}

std::optional<std::size_t> RawTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

const Column& RawTable::column(const std::string& name) const {
  auto i = index_of(name);
  if (!i) fail(ErrorKind::invalid_argument, "no column named '" + name + "'");
  return columns_[*i];
}

const std::vector<std::string>& kdd_column_names() {
  static const std::vector<std::string> names{
      "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
      "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
      "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
      "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
      "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
      "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
      "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
      "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
      "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
      kKddLabelColumn};
  return names;
}

bool kdd_is_categorical(const std::string& column) {
  return column == "protocol_type" || column == "service" || column == "flag" ||
         column == kKddLabelColumn;
}

RawTable load_kdd(std::istream& in, MalformedRows policy, LoadReport* report) {
  const auto& names = kdd_column_names();
  std::vector<Column> cols(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    cols[c].name = names[c];
    cols[c].numeric = !kdd_is_categorical(names[c]);
  }
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = {};

  std::string line;
  std::size_t lineno = 0;
  std::vector<double> numbers(names.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, ',');
    std::string problem;
    if (fields.size() != names.size()) {
      problem = "expected " + std::to_string(names.size()) + " fields, found " +
                std::to_string(fields.size());
    } else {
      for (std::size_t c = 0; c < names.size() && problem.empty(); ++c) {
        if (!cols[c].numeric) continue;
        auto v = text::parse_double(fields[c]);
        if (!v) problem = "column " + names[c] + " is not numeric: '" + fields[c] + "'";
        else numbers[c] = *v;
      }
    }
    if (!problem.empty()) {
      std::string msg = "line " + std::to_string(lineno) + ": " + problem;
      if (policy == MalformedRows::abort) fail(ErrorKind::parse, msg);
      ++rep.skipped;
      rep.problems.push_back(msg);
      log_warn("skipping " + msg);
      continue;
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (cols[c].numeric) {
        cols[c].numbers.push_back(numbers[c]);
      } else {
        std::string v = text::trim(fields[c]);
        if (c + 1 == names.size() && !v.empty() && v.back() == '.') v.pop_back();
        cols[c].strings.push_back(text::sanitize_label(v));
      }
    }
    ++rep.rows;
  }
  RawTable table;
  for (auto& c : cols) table.add_column(std::move(c));
  return table;
}

RawTable load_kdd_file(const std::string& path, MalformedRows policy, LoadReport* report) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return load_kdd(in, policy, report);
}

std::string attack_category(const std::string& attack) {
  static const std::unordered_map<std::string, std::string> table{
      {"normal", "normal"},
      {"back", "dos"}, {"land", "dos"}, {"neptune", "dos"}, {"pod", "dos"}, {"smurf", "dos"},
      {"teardrop", "dos"}, {"apache2", "dos"}, {"mailbomb", "dos"}, {"processtable", "dos"},
      {"udpstorm", "dos"},
      {"ipsweep", "probe"}, {"nmap", "probe"}, {"portsweep", "probe"}, {"satan", "probe"},
      {"mscan", "probe"}, {"saint", "probe"},
      {"ftp_write", "r2l"}, {"guess_passwd", "r2l"}, {"imap", "r2l"}, {"multihop", "r2l"},
      {"phf", "r2l"}, {"spy", "r2l"}, {"warezclient", "r2l"}, {"warezmaster", "r2l"},
      {"named", "r2l"}, {"sendmail", "r2l"}, {"snmpgetattack", "r2l"}, {"snmpguess", "r2l"},
      {"worm", "r2l"}, {"xlock", "r2l"}, {"xsnoop", "r2l"}, {"httptunnel", "r2l"},
      {"buffer_overflow", "u2r"}, {"loadmodule", "u2r"}, {"perl", "u2r"}, {"rootkit", "u2r"},
      {"ps", "u2r"}, {"sqlattack", "u2r"}, {"xterm", "u2r"}};
  auto it = table.find(attack);
  return it == table.end() ? attack : it->second;
}

void apply_label_granularity(RawTable& table, const std::string& column, LabelGranularity g) {
  if (g == LabelGranularity::attack) return;
  auto idx = table.index_of(column);
  if (!idx) fail(ErrorKind::invalid_argument, "no column named '" + column + "'");
  auto& col = table.mutable_columns()[*idx];
  if (col.numeric) fail(ErrorKind::invalid_argument, "label column '" + column + "' is numeric");
  for (auto& s : col.strings) s = attack_category(s);
}

double gini_impurity(std::span<const std::size_t> class_counts) {
  const double n = static_cast<double>(std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0}));
  if (n == 0.0) return 0.0;
  double sq = 0.0;
  for (auto c : class_counts) sq += (c / n) * (c / n);
  return 1.0 - sq;
}

namespace {

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Value keys of a column for grouping: category strings, or the mean bin.
std::vector<std::string> grouping_keys(const Column& col) {
  if (!col.numeric) return col.strings;
  std::vector<std::string> keys;
  if (col.numbers.empty()) return keys;
  DiscretizationRule rule{col.name, mean_of(col.numbers)};
  keys.reserve(col.numbers.size());
  for (double v : col.numbers) keys.emplace_back(rule.bin(v));
  return keys;
}

std::vector<std::size_t> dense_codes(const std::vector<std::string>& keys, std::size_t& distinct) {
  std::map<std::string, std::size_t> ids;
  for (const auto& k : keys) ids.emplace(k, 0);
  std::size_t next = 0;
  for (auto& [k, id] : ids) id = next++;
  distinct = next;
  std::vector<std::size_t> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(ids[k]);
  return out;
}

}  // namespace

FeatureRanking gini_rank(const RawTable& table, const std::string& class_column) {
  const Column& cls = table.column(class_column);
  std::size_t n_classes = 0;
  auto y = dense_codes(grouping_keys(cls), n_classes);
  std::vector<std::size_t> totals(n_classes, 0);
  for (auto c : y) ++totals[c];
  const double base = gini_impurity(totals);
  const double n = static_cast<double>(y.size());
  if (n_classes <= 1) log_warn("class column '" + class_column + "' is constant; every Gini gain is 0");

  FeatureRanking ranking;
  for (const auto& col : table.columns()) {
    if (col.name == class_column) continue;
    double gain = 0.0;
    if (n_classes > 1) {
      std::size_t n_values = 0;
      auto x = dense_codes(grouping_keys(col), n_values);
      std::vector<std::size_t> joint(n_values * n_classes, 0);
      for (std::size_t r = 0; r < x.size(); ++r) ++joint[x[r] * n_classes + y[r]];
      double conditional = 0.0;
      for (std::size_t v = 0; v < n_values; ++v) {
        std::span<const std::size_t> counts(joint.data() + v * n_classes, n_classes);
        double nv = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
        conditional += nv / n * gini_impurity(counts);
      }
      gain = std::clamp(base - conditional, 0.0, base);
    }
    ranking.push_back({col.name, gain});
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const FeatureScore& a, const FeatureScore& b) { return a.gain > b.gain; });
  return ranking;
}

Discretized mean_discretize(const std::string& column, std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::invalid_argument, "cannot discretize empty column '" + column + "'");
  Discretized out;
  out.rule = {column, mean_of(values)};
  out.degenerate = std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
  if (out.degenerate) log_info("column '" + column + "' is constant; every value falls in v2");
  for (double v : values) out.bins.emplace_back(out.rule.bin(v));
  return out;
}

std::vector<std::string> select_features(const FeatureRanking& ranking, std::size_t k,
                                         const std::string& class_column) {
  if (k > ranking.size()) {
    fail(ErrorKind::invalid_argument, "top-k " + std::to_string(k) + " exceeds the " +
                                          std::to_string(ranking.size()) + " ranked features");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranking[i].column);
  out.push_back(class_column);
  return out;
}

const DiscretizationRule* FeatureRules::numeric_rule(const std::string& column) const {
  for (const auto& r : numeric) {
    if (r.column == column) return &r;
  }
  return nullptr;
}

const CategoricalRule* FeatureRules::categorical_rule(const std::string& column) const {
  for (const auto& r : categorical) {
    if (r.column == column) return &r;
  }
  return nullptr;
}

std::vector<std::string> FeatureRules::to_lines() const {
  std::vector<std::string> lines;
  for (const auto& r : numeric) lines.push_back(r.column + " mean=" + text::format_number(r.threshold));
  for (const auto& r : categorical) {
    std::string line = r.column + " states=";
    for (std::size_t i = 0; i < r.states.size(); ++i) line += (i ? "," : "") + r.states[i];
    lines.push_back(line);
  }
  return lines;
}

FeatureRules FeatureRules::from_lines(std::span<const std::string> lines) {
  FeatureRules rules;
  for (const auto& raw : lines) {
    std::string line = text::trim(raw);
    auto space = line.find(' ');
    if (space == std::string::npos) fail(ErrorKind::parse, "rule line '" + line + "' has no value");
    std::string column = line.substr(0, space);
    std::string value = text::trim(line.substr(space + 1));
    if (value.rfind("mean=", 0) == 0) {
      auto m = text::parse_double(value.substr(5));
      if (!m || !std::isfinite(*m)) fail(ErrorKind::parse, "rule for '" + column + "' has a bad mean");
      rules.numeric.push_back({column, *m});
    } else if (value.rfind("states=", 0) == 0) {
      auto states = text::split(value.substr(7), ',');
      rules.categorical.push_back({column, states});
    } else {
      fail(ErrorKind::parse, "rule line '" + line + "' is neither mean= nor states=");
    }
  }
  return rules;
}

FeatureRules fit_rules(const RawTable& table, std::span<const std::string> columns) {
  FeatureRules rules;
  for (const auto& name : columns) {
    const Column& col = table.column(name);
    if (col.numeric) {
      if (col.numbers.empty()) fail(ErrorKind::data, "no rows to discretize column '" + name + "'");
      rules.numeric.push_back(mean_discretize(name, col.numbers).rule);
    } else {
      std::set<std::string> distinct;
      for (const auto& s : col.strings) distinct.insert(text::sanitize_label(s));
      if (distinct.empty()) fail(ErrorKind::data, "no values observed in column '" + name + "'");
      rules.categorical.push_back({name, {distinct.begin(), distinct.end()}});
    }
  }
  return rules;
}

Variable rule_variable(const FeatureRules& rules, const std::string& column, VarId id,
                       bool with_unknown) {
  Variable v{id, column, {}};
  if (rules.numeric_rule(column)) {
    v.states = {kBelowMean, kAtOrAboveMean};
  } else if (const auto* c = rules.categorical_rule(column)) {
    v.states = c->states;
    if (with_unknown) v.states.emplace_back(kUnknownState);
  } else {
    fail(ErrorKind::invalid_argument, "no rule for column '" + column + "'");
  }
  return v;
}

std::optional<StateIndex> encode_value(const FeatureRules& rules, const Variable& var,
                                       const std::string& raw) {
  if (const auto* r = rules.numeric_rule(var.name)) {
    auto v = text::parse_double(raw);
    if (!v) return std::nullopt;
    return var.state_index(r->bin(*v));
  }
  if (auto s = var.state_index(text::sanitize_label(text::trim(raw)))) return s;
  return var.state_index(kUnknownState);
}

DiscreteDataset to_discrete_dataset(const RawTable& table, const FeatureRules& rules,
                                    std::span<const std::string> selected, bool with_unknown,
                                    const std::string& class_column) {
  std::vector<Variable> vars;
  std::vector<const Column*> cols;
  for (const auto& name : selected) {
    const Column& col = table.column(name);
    if (col.numeric && !rules.numeric_rule(name)) {
      fail(ErrorKind::invalid_argument, "numeric column '" + name + "' has no discretization rule");
    }
    vars.push_back(rule_variable(rules, name, vars.size(), with_unknown && name != class_column));
    cols.push_back(&col);
  }
  DiscreteDataset data(vars);
  std::vector<StateIndex> row(vars.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < vars.size(); ++c) {
      const Column& col = *cols[c];
      std::optional<StateIndex> s;
      if (col.numeric) {
        s = vars[c].state_index(rules.numeric_rule(col.name)->bin(col.numbers[r]));
      } else {
        s = encode_value(rules, vars[c], col.strings[r]);
      }
      if (!s) {
        fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": value of '" + col.name +
                                  "' has no state under the rules");
      }
      row[c] = *s;
    }
    data.add_row(row);
  }
  return data;
}

Dag extend_with_unknown(const Dag& learned, const FeatureRules& rules,
                        std::span<const std::string> columns, const std::string& class_column) {
  std::vector<Variable> vars;
  for (const auto& c : columns) vars.push_back(rule_variable(rules, c, vars.size(), c != class_column));
  Dag dag(vars);
  for (VarId child = 0; child < learned.size(); ++child) {
    for (VarId parent : learned.parents(child)) dag.add_edge(parent, child);
  }
  return dag;
}

}  // namespace hidpas
