#include "hidpas/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

#include "hidpas/error.hpp"
#include "hidpas/log.hpp"
#include "hidpas/text.hpp"

namespace hidpas {

namespace {

double parse_tau(const std::string& text) {
  auto v = text::parse_unit_interval(text);
  if (!v) fail(ErrorKind::parse, "tau '" + text + "' is not in [0,1]");
  return *v;
}

std::string line_error(std::size_t lineno, const std::string& what) {
  return "line " + std::to_string(lineno) + ": " + what;
}

const std::string& attribute(const AlertRecord& a, const std::string& name) {
  if (name == "sensor") return a.sensor;
  if (name == "src_ip") return a.src_ip;
  if (name == "src_port") return a.src_port;
  if (name == "dst_ip") return a.dst_ip;
  if (name == "dst_port") return a.dst_port;
  if (name == "attack_type") return a.attack_type;
  fail(ErrorKind::invalid_argument, "unknown alert attribute '" + name + "'");
}

const char* merge_field(MergeKey key) {
  switch (key) {
    case MergeKey::none: return "none";
    case MergeKey::attack_type: return "attack_type";
    case MergeKey::sensor: return "sensor";
    case MergeKey::src_ip: return "src_ip";
    case MergeKey::dst_ip: return "dst_ip";
    case MergeKey::dst_port: return "dst_port";
  }
  return "none";
}

}  // namespace

std::vector<AlertRecord> read_alert_log(std::istream& in) {
  std::vector<AlertRecord> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    if (!header) {
      if (text::trim(line) != kAlertLogHeader) {
        fail(ErrorKind::parse, line_error(lineno, std::string("expected header '") + kAlertLogHeader + "'"));
      }
      header = true;
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != 7) {
      fail(ErrorKind::parse, line_error(lineno, "expected 7 fields, found " + std::to_string(f.size())));
    }
    for (auto& x : f) x = text::trim(x);
    auto ts = text::parse_double(f[0]);
    if (!ts || !std::isfinite(*ts)) fail(ErrorKind::parse, line_error(lineno, "bad timestamp '" + f[0] + "'"));
    for (std::size_t i = 1; i < 7; ++i) {
      if (f[i].empty()) fail(ErrorKind::parse, line_error(lineno, "empty field " + std::to_string(i + 1)));
    }
    out.push_back({*ts, text::sanitize_label(f[1]), text::sanitize_label(f[2]), text::sanitize_label(f[3]),
                   text::sanitize_label(f[4]), text::sanitize_label(f[5]), text::sanitize_label(f[6])});
  }
  if (!header) fail(ErrorKind::parse, "alert log is empty; the header line is required");
  return out;
}

std::vector<AlertRecord> read_alert_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return read_alert_log(in);
}

void write_alert_log(std::ostream& out, std::span<const AlertRecord> alerts) {
  out << kAlertLogHeader << "\n";
  for (const auto& a : alerts) {
    out << text::format_number(a.timestamp) << "," << a.sensor << "," << a.src_ip << "," << a.src_port
        << "," << a.dst_ip << "," << a.dst_port << "," << a.attack_type << "\n";
  }
}

double HyperAlert::earliest() const {
  if (timestamps.empty()) fail(ErrorKind::invalid_argument, "hyper-alert has no members");
  return *std::min_element(timestamps.begin(), timestamps.end());
}

std::optional<MergeKey> parse_merge_key(const std::string& text) {
  for (MergeKey k : {MergeKey::none, MergeKey::attack_type, MergeKey::sensor, MergeKey::src_ip,
                     MergeKey::dst_ip, MergeKey::dst_port}) {
    if (text == merge_field(k)) return k;
  }
  return std::nullopt;
}

Aggregation aggregate_alerts(std::span<const AlertRecord> log, MergeKey merge) {
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string, std::string>;
  std::map<Key, std::size_t> phase_one_index;
  std::vector<std::size_t> phase_one_of(log.size());
  std::vector<std::size_t> phase_one_first;  // first alert index of each cluster
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& a = log[i];
    Key key{a.sensor, a.src_ip, a.src_port, a.dst_ip, a.dst_port, a.attack_type};
    auto [it, inserted] = phase_one_index.emplace(key, phase_one_first.size());
    if (inserted) phase_one_first.push_back(i);
    phase_one_of[i] = it->second;
  }

  Aggregation out;
  out.phase_one_count = phase_one_first.size();
  std::vector<std::size_t> group_of_cluster(phase_one_first.size());
  if (merge == MergeKey::none) {
    std::iota(group_of_cluster.begin(), group_of_cluster.end(), 0);
    for (std::size_t c = 0; c < phase_one_first.size(); ++c) {
      const auto& rep = log[phase_one_first[c]];
      out.hyper_alerts.push_back({c + 1, rep.attack_type + "#" + std::to_string(c + 1), rep, {}, {}});
    }
  } else {
    std::map<std::string, std::size_t> by_value;
    for (std::size_t c = 0; c < phase_one_first.size(); ++c) {
      const auto& rep = log[phase_one_first[c]];
      const std::string& value = attribute(rep, merge_field(merge));
      auto [it, inserted] = by_value.emplace(value, out.hyper_alerts.size());
      if (inserted) out.hyper_alerts.push_back({out.hyper_alerts.size() + 1, value, rep, {}, {}});
      group_of_cluster[c] = it->second;
    }
  }
  out.assignment.resize(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::size_t h = group_of_cluster[phase_one_of[i]];
    out.assignment[i] = h;
    out.hyper_alerts[h].members.push_back(i);
    out.hyper_alerts[h].timestamps.push_back(log[i].timestamp);
  }
  return out;
}

void write_hyper_alerts_csv(std::ostream& out, std::span<const HyperAlert> hyper_alerts) {
  out << "id,name,size,first_timestamp,sensor,src_ip,src_port,dst_ip,dst_port,attack_type\n";
  for (const auto& h : hyper_alerts) {
    const auto& r = h.representative;
    out << h.id << "," << h.name << "," << h.size() << "," << text::format_number(h.earliest()) << ","
        << r.sensor << "," << r.src_ip << "," << r.src_port << "," << r.dst_ip << "," << r.dst_port << ","
        << r.attack_type << "\n";
  }
}

const std::vector<std::string>& AlertClassifier::attributes() {
  static const std::vector<std::string> names{"src_ip", "src_port", "dst_ip", "dst_port", "attack_type"};
  return names;
}

AlertClassifier::AlertClassifier(FeatureRules rules, BayesNet net, double tau)
    : rules_(std::move(rules)), tau_(tau) {
  const auto& attrs = attributes();
  if (net.size() != attrs.size() + 1) fail(ErrorKind::data, "alert classifier has the wrong variable count");
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (net.variable(i).name != attrs[i] || !rules_.categorical_rule(attrs[i])) {
      fail(ErrorKind::data, "alert classifier variable " + std::to_string(i) + " must be '" + attrs[i] + "'");
    }
  }
  if (net.variable(attrs.size()).name != kClassColumn) {
    fail(ErrorKind::data, std::string("alert classifier class must be '") + kClassColumn + "'");
  }
  auto problems = validate_network(net);
  if (!problems.empty()) fail(ErrorKind::data, "alert classifier invalid: " + problems.front().description);
  if (!(tau_ >= 0.0 && tau_ <= 1.0)) fail(ErrorKind::invalid_argument, "tau must lie in [0,1]");
  engine_ = std::make_shared<const HybridEngine>(std::move(net));
}

ModelFile AlertClassifier::to_model_file() const {
  ModelFile file{network(), {}, rules_.to_lines()};
  file.meta["kind"] = "alert_classifier";
  file.meta["tau"] = text::format_number(tau_);
  return file;
}

AlertClassifier AlertClassifier::from_model_file(const ModelFile& file) {
  if (file.require("kind") != "alert_classifier") fail(ErrorKind::parse, "model is not an alert classifier");
  return AlertClassifier(FeatureRules::from_lines(file.rules), file.net, parse_tau(file.require("tau")));
}

void AlertClassifier::save(const std::string& path) const { save_model(path, to_model_file()); }

AlertClassifier AlertClassifier::load(const std::string& path) { return from_model_file(load_model(path)); }

AlertClassifier train_alert_classifier(std::span<const AlertRecord> alerts,
                                       std::span<const std::string> labels,
                                       const ClassifierConfig& config) {
  if (alerts.size() != labels.size()) fail(ErrorKind::invalid_argument, "every alert needs one label");
  if (alerts.empty()) fail(ErrorKind::data, "no alerts to train the classifier");
  RawTable table;
  std::vector<std::string> columns = AlertClassifier::attributes();
  for (const auto& name : columns) {
    Column col{name, false, {}, {}};
    for (const auto& a : alerts) col.strings.push_back(attribute(a, name));
    table.add_column(std::move(col));
  }
  Column cls{AlertClassifier::kClassColumn, false, {}, {}};
  for (const auto& l : labels) cls.strings.push_back(text::sanitize_label(l));
  table.add_column(std::move(cls));
  columns.push_back(AlertClassifier::kClassColumn);

  auto rules = fit_rules(table, columns);
  auto data = to_discrete_dataset(table, rules, columns, false, AlertClassifier::kClassColumn);
  LearnConfig learn;
  learn.max_parents = config.max_parents;
  learn.smoothing = config.smoothing;
  learn.order.push_back(columns.size() - 1);
  for (VarId i = 0; i + 1 < columns.size(); ++i) learn.order.push_back(i);
  Dag dag = extend_with_unknown(k2_search(data, learn), rules, columns, AlertClassifier::kClassColumn);
  data.mutable_columns() = dag.variables();
  return AlertClassifier(std::move(rules), fit_cpts(data, dag, config.smoothing), config.tau);
}

Classification classify_alert(const AlertClassifier& classifier, const AlertRecord& alert) {
  const BayesNet& net = classifier.network();
  Evidence evidence;
  const auto& attrs = AlertClassifier::attributes();
  for (VarId v = 0; v < attrs.size(); ++v) {
    const std::string& raw = attribute(alert, attrs[v]);
    if (raw.empty()) continue;
    auto s = encode_value(classifier.rules(), net.variable(v), raw);
    if (s) evidence[v] = *s;
  }
  Classification out;
  try {
    out.marginal = classifier.engine().query(evidence, classifier.class_variable());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::impossible_evidence) throw;
    out.impossible_evidence = true;
    out.marginal = classifier.engine().query({}, classifier.class_variable());
  }
  Selection sel = select_state(out.marginal, classifier.tau());
  out.state = sel.state;
  out.low_confidence = sel.low_confidence || out.impossible_evidence;
  out.label = net.variable(classifier.class_variable()).states[sel.state];
  return out;
}

TransactionMatrix build_transactions(std::span<const HyperAlert> hyper_alerts, double slot,
                                     std::optional<double> start, std::optional<double> range) {
  if (!(slot > 0.0) || !std::isfinite(slot)) fail(ErrorKind::invalid_argument, "slot width must be positive");
  TransactionMatrix tm;
  tm.slot = slot;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& h : hyper_alerts) {
    for (double t : h.timestamps) {
      lo = any ? std::min(lo, t) : t;
      hi = any ? std::max(hi, t) : t;
      any = true;
    }
  }
  tm.start = start.value_or(lo);
  if (range) {
    if (!(*range >= slot)) fail(ErrorKind::invalid_argument, "time range must be at least one slot");
    tm.range = *range;
    tm.slots = static_cast<std::size_t>(std::ceil(*range / slot));
  } else {
    tm.slots = hi >= tm.start ? static_cast<std::size_t>(std::floor((hi - tm.start) / slot)) + 1 : 1;
    tm.range = static_cast<double>(tm.slots) * slot;
  }
  for (const auto& h : hyper_alerts) {
    tm.names.push_back(text::sanitize_label(h.name));
    tm.earliest.push_back(h.timestamps.empty() ? tm.start : h.earliest());
    std::vector<std::uint8_t> row(tm.slots, 0);
    for (double t : h.timestamps) {
      if (t < tm.start || t >= tm.start + tm.range) {
        ++tm.ignored;
        continue;
      }
      auto i = static_cast<std::size_t>(std::floor((t - tm.start) / slot));
      row[std::min(i, tm.slots - 1)] = 1;
    }
    tm.occurrences.push_back(std::move(row));
  }
  if (tm.ignored) log_info(std::to_string(tm.ignored) + " alert(s) fall outside the time range");
  return tm;
}

DiscreteDataset transactions_dataset(const TransactionMatrix& tm) {
  std::vector<Variable> vars;
  for (const auto& n : tm.names) vars.push_back({vars.size(), n, {kAbsent, kPresent}});
  DiscreteDataset data(vars);
  std::vector<StateIndex> row(vars.size());
  for (std::size_t i = 0; i < tm.slots; ++i) {
    for (std::size_t h = 0; h < vars.size(); ++h) row[h] = tm.occurrences[h][i];
    data.add_row(row);
  }
  return data;
}

PlanModel::PlanModel(BayesNet net, double tau) : tau_(tau) {
  for (const auto& v : net.dag().variables()) {
    if (v.states != std::vector<std::string>{kAbsent, kPresent}) {
      fail(ErrorKind::data, "plan variable '" + v.name + "' must have states absent,present");
    }
  }
  auto problems = validate_network(net);
  if (!problems.empty()) fail(ErrorKind::data, "plan network invalid: " + problems.front().description);
  if (!(tau_ >= 0.0 && tau_ <= 1.0)) fail(ErrorKind::invalid_argument, "tau must lie in [0,1]");
  engine_ = std::make_shared<const HybridEngine>(std::move(net));
}

ModelFile PlanModel::to_model_file() const {
  ModelFile file{network(), {}, {}};
  file.meta["kind"] = "plan";
  file.meta["tau"] = text::format_number(tau_);
  return file;
}

PlanModel PlanModel::from_model_file(const ModelFile& file) {
  if (file.require("kind") != "plan") fail(ErrorKind::parse, "model is not an attack-plan model");
  return PlanModel(file.net, parse_tau(file.require("tau")));
}

void PlanModel::save(const std::string& path) const { save_model(path, to_model_file()); }

PlanModel PlanModel::load(const std::string& path) { return from_model_file(load_model(path)); }

PlanModel train_plan_model(const TransactionMatrix& tm, const PlanConfig& config) {
  if (tm.names.empty() || tm.slots == 0) fail(ErrorKind::data, "plan model needs hyper-alerts and slots");
  DiscreteDataset data = transactions_dataset(tm);
  LearnConfig learn;
  learn.max_parents = config.max_parents;
  learn.smoothing = config.smoothing;
  if (config.order.empty()) {
    learn.order.resize(tm.names.size());
    std::iota(learn.order.begin(), learn.order.end(), 0);
    std::stable_sort(learn.order.begin(), learn.order.end(),
                     [&](VarId a, VarId b) { return tm.earliest[a] < tm.earliest[b]; });
  } else {
    for (const auto& name : config.order) {
      auto it = std::find(tm.names.begin(), tm.names.end(), name);
      if (it == tm.names.end()) fail(ErrorKind::invalid_argument, "order names unknown hyper-alert '" + name + "'");
      learn.order.push_back(static_cast<VarId>(it - tm.names.begin()));
    }
  }
  Dag dag = k2_search(data, learn);
  return PlanModel(fit_cpts(data, dag, config.smoothing), config.tau);
}

PredictionReport predict_attacks(const PlanModel& model, std::span<const std::string> observed,
                                 const SelectionRule& rule) {
  const BayesNet& net = model.network();
  Evidence evidence;
  PredictionReport report;
  for (const auto& name : observed) {
    auto v = model.find(name);
    if (!v) fail(ErrorKind::invalid_argument, "hyper-alert '" + name + "' is not in the plan model");
    if (!evidence.count(*v)) report.observed.push_back(name);
    evidence[*v] = 1;
  }
  std::vector<VarId> targets;
  for (VarId v = 0; v < net.size(); ++v) {
    if (!evidence.count(v)) targets.push_back(v);
  }
  auto marginals = model.engine().query(evidence, targets);
  double best = -1.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    PredictionRow row;
    row.name = net.variable(targets[i]).name;
    row.triple = marginals[i].triple(1);
    row.informative = is_informative(row.triple, model.tau());
    if (row.informative) best = std::max(best, row.triple.probability);
    report.rows.push_back(row);
  }
  std::vector<const PredictionRow*> chosen;
  for (auto& row : report.rows) {
    if (!row.informative) continue;
    row.selected = rule.kind == SelectionRule::Kind::max ? row.triple.probability == best
                                                         : row.triple.probability >= rule.theta;
    if (row.selected) chosen.push_back(&row);
  }
  std::stable_sort(chosen.begin(), chosen.end(), [](const PredictionRow* a, const PredictionRow* b) {
    return a->triple.probability > b->triple.probability;
  });
  for (const auto* row : chosen) report.ranked.push_back(row->name);
  return report;
}

std::string format_prediction_report(const PredictionReport& report) {
  std::string out = "observed: " + (report.observed.empty() ? std::string("-") : text::join(report.observed, ',')) + "\n";
  out += "hyper_alert  N  P  Π  informative  selected\n";
  for (const auto& r : report.rows) {
    out += r.name + "  " + format_probability(r.triple.necessity) + "  " +
           format_probability(r.triple.probability) + "  " + format_probability(r.triple.possibility) +
           "  " + (r.informative ? "yes" : "no") + "  " + (r.selected ? "yes" : "no") + "\n";
  }
  out += "predicted: " + (report.ranked.empty() ? std::string("-") : text::join(report.ranked, ',')) + "\n";
  return out;
}

std::vector<CorrelationEdge> correlation_edges(const PlanModel& model) {
  std::vector<CorrelationEdge> out;
  const BayesNet& net = model.network();
  for (auto [from, to] : net.dag().edges()) {
    auto m = model.engine().query({{from, 1}}, to);
    out.push_back({net.variable(from).name, net.variable(to).name, m.triple(1)});
  }
  return out;
}

}  // namespace hidpas
