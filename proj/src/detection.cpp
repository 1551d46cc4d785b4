#include "hidpas/detection.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

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

}  // namespace

DetectorModel::DetectorModel(std::vector<std::string> features, std::string class_column,
                             FeatureRules rules, BayesNet net, double tau)
    : features_(std::move(features)),
      class_column_(std::move(class_column)),
      rules_(std::move(rules)),
      tau_(tau) {
  if (net.size() != features_.size() + 1) {
    fail(ErrorKind::data, "detector network has " + std::to_string(net.size()) +
                              " variables, expected " + std::to_string(features_.size() + 1));
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (net.variable(i).name != features_[i]) {
      fail(ErrorKind::data, "detector variable " + std::to_string(i) + " is '" +
                                net.variable(i).name + "', expected '" + features_[i] + "'");
    }
    if (!rules_.numeric_rule(features_[i]) && !rules_.categorical_rule(features_[i])) {
      fail(ErrorKind::data, "no rule for feature '" + features_[i] + "'");
    }
  }
  if (net.variable(features_.size()).name != class_column_) {
    fail(ErrorKind::data, "last detector variable must be the class '" + class_column_ + "'");
  }
  auto problems = validate_network(net);
  if (!problems.empty()) fail(ErrorKind::data, "detector network invalid: " + problems.front().description);
  if (!(tau_ >= 0.0 && tau_ <= 1.0)) fail(ErrorKind::invalid_argument, "tau must lie in [0,1]");

  const auto& kdd = kdd_column_names();
  for (const auto& f : features_) {
    auto it = std::find(kdd.begin(), kdd.begin() + kKddFeatureCount, f);
    positions_.push_back(static_cast<std::size_t>(it - kdd.begin()));
  }
  engine_ = std::make_shared<const HybridEngine>(std::move(net));
}

ModelFile DetectorModel::to_model_file() const {
  ModelFile file{network(), {}, rules_.to_lines()};
  file.meta["kind"] = "detector";
  file.meta["class_column"] = class_column_;
  file.meta["features"] = text::join(features_, ',');
  file.meta["tau"] = text::format_number(tau_);
  return file;
}

DetectorModel DetectorModel::from_model_file(const ModelFile& file) {
  if (file.require("kind") != "detector") fail(ErrorKind::parse, "model is not a detector");
  std::string features = file.require("features");
  std::vector<std::string> names = features.empty() ? std::vector<std::string>{} : text::split(features, ',');
  return DetectorModel(std::move(names), file.require("class_column"),
                       FeatureRules::from_lines(file.rules), file.net, parse_tau(file.require("tau")));
}

void DetectorModel::save(const std::string& path) const { save_model(path, to_model_file()); }

DetectorModel DetectorModel::load(const std::string& path) { return from_model_file(load_model(path)); }

DetectorModel train_detector(const RawTable& input, const DetectorConfig& config) {
  RawTable table = input;
  apply_label_granularity(table, config.class_column, config.granularity);
  if (table.rows() == 0) fail(ErrorKind::data, "no training rows");

  auto ranking = gini_rank(table, config.class_column);
  auto selected = select_features(ranking, std::min(config.top_k, ranking.size()), config.class_column);
  if (config.top_k > ranking.size()) {
    log_warn("top-k " + std::to_string(config.top_k) + " exceeds the feature count; using all");
  }
  std::vector<std::string> features(selected.begin(), selected.end() - 1);
  auto rules = fit_rules(table, selected);
  DiscreteDataset data = to_discrete_dataset(table, rules, selected, false, config.class_column);

  LearnConfig learn;
  learn.max_parents = config.max_parents;
  learn.smoothing = config.smoothing;
  if (config.order.empty()) {
    learn.order.push_back(features.size());
    for (VarId i = 0; i < features.size(); ++i) learn.order.push_back(i);
  } else {
    for (const auto& name : config.order) {
      auto it = std::find(selected.begin(), selected.end(), name);
      if (it == selected.end()) fail(ErrorKind::invalid_argument, "order names unselected column '" + name + "'");
      learn.order.push_back(static_cast<VarId>(it - selected.begin()));
    }
  }
  Dag learned = k2_search(data, learn);
  Dag dag = extend_with_unknown(learned, rules, selected, config.class_column);
  data.mutable_columns() = dag.variables();
  BayesNet net = fit_cpts(data, dag, config.smoothing);
  return DetectorModel(std::move(features), config.class_column, std::move(rules), std::move(net),
                       config.tau);
}

Classification classify_connection(const DetectorModel& model, const ConnectionRecord& record) {
  if (record.fields.size() < kKddFeatureCount) {
    fail(ErrorKind::data, "connection record has " + std::to_string(record.fields.size()) +
                              " fields, expected " + std::to_string(kKddFeatureCount));
  }
  const BayesNet& net = model.network();
  Evidence evidence;
  for (VarId v = 0; v < model.features().size(); ++v) {
    const std::size_t pos = model.record_positions()[v];
    if (pos >= kKddFeatureCount) continue;
    const std::string raw = text::trim(record.fields[pos]);
    if (raw.empty() || raw == "?") continue;
    auto s = encode_value(model.rules(), net.variable(v), raw);
    if (!s) fail(ErrorKind::data, "value '" + raw + "' of '" + net.variable(v).name + "' is not usable");
    evidence[v] = *s;
  }
  Classification out;
  try {
    out.marginal = model.engine().query(evidence, model.class_variable());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::impossible_evidence) throw;
    out.impossible_evidence = true;
    out.marginal = model.engine().query({}, model.class_variable());
  }
  Selection sel = select_state(out.marginal, model.tau());
  out.state = sel.state;
  out.low_confidence = sel.low_confidence || out.impossible_evidence;
  out.label = net.variable(model.class_variable()).states[sel.state];
  return out;
}

std::vector<StreamRecord> read_connection_stream(std::istream& in, std::vector<std::string>* problems) {
  std::vector<StreamRecord> out;
  std::string line;
  std::size_t lineno = 0, sequence = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, ',');
    StreamRecord rec;
    rec.line = lineno;
    std::size_t offset = 0;
    if (fields.size() == kKddFeatureCount || fields.size() == kKddFeatureCount + 1) {
      rec.timestamp = static_cast<double>(sequence);
    } else if (fields.size() == kKddFeatureCount + 3 || fields.size() == kKddFeatureCount + 4) {
      auto ts = text::parse_double(fields[0]);
      if (!ts) {
        std::string msg = "line " + std::to_string(lineno) + ": bad timestamp '" + fields[0] + "'";
        log_warn(msg);
        if (problems) problems->push_back(msg);
        continue;
      }
      rec.timestamp = *ts;
      rec.src_ip = text::sanitize_label(text::trim(fields[1]));
      rec.dst_ip = text::sanitize_label(text::trim(fields[2]));
      offset = 3;
    } else {
      std::string msg = "line " + std::to_string(lineno) + ": expected 41, 42, 44 or 45 fields, found " +
                        std::to_string(fields.size());
      log_warn(msg);
      if (problems) problems->push_back(msg);
      continue;
    }
    rec.record.fields.assign(fields.begin() + static_cast<std::ptrdiff_t>(offset),
                             fields.begin() + static_cast<std::ptrdiff_t>(offset + kKddFeatureCount));
    ++sequence;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<StreamRecord> read_connection_stream_file(const std::string& path,
                                                      std::vector<std::string>* problems) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return read_connection_stream(in, problems);
}

std::vector<DetectionAlert> detect_stream(const DetectorModel& model,
                                          std::span<const StreamRecord> records,
                                          const std::string& host,
                                          std::vector<std::string>* problems) {
  std::vector<DetectionAlert> alerts;
  for (const auto& rec : records) {
    Classification c;
    try {
      c = classify_connection(model, rec.record);
    } catch (const Error& e) {
      std::string msg = "line " + std::to_string(rec.line) + ": " + e.what();
      log_warn(msg);
      if (problems) problems->push_back(msg);
      continue;
    }
    if (c.label == kNormalLabel) continue;
    alerts.push_back({rec.timestamp, host, rec.src_ip, rec.dst_ip, c.label,
                      c.marginal.triple(c.state), c.low_confidence});
  }
  return alerts;
}

void write_alerts_csv(std::ostream& out, std::span<const DetectionAlert> alerts) {
  out << kAlertCsvHeader << "\n";
  for (const auto& a : alerts) {
    out << text::format_number(a.timestamp) << "," << a.host << "," << a.src_ip << "," << a.dst_ip
        << "," << a.type << "," << format_probability(a.triple.necessity) << ","
        << format_probability(a.triple.probability) << "," << format_probability(a.triple.possibility)
        << "\n";
  }
}

std::vector<DetectionAlert> read_alerts_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<DetectionAlert> out;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    if (!header) {
      if (text::trim(line) != kAlertCsvHeader) fail(ErrorKind::parse, "line 1: unexpected alert header");
      header = true;
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != 8) fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": expected 8 fields");
    std::vector<double> nums;
    for (std::size_t i : {0u, 5u, 6u, 7u}) {
      auto v = text::parse_double(f[i]);
      if (!v) fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": bad number '" + f[i] + "'");
      nums.push_back(*v);
    }
    out.push_back({nums[0], f[1], f[2], f[3], f[4], {nums[1], nums[2], nums[3]}, false});
  }
  return out;
}

}  // namespace hidpas
