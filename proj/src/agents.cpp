#include "hidpas/agents.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

#include "hidpas/error.hpp"
#include "hidpas/log.hpp"
#include "hidpas/text.hpp"

namespace hidpas {

namespace {

using nlohmann::json;

std::string resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.string();
}

std::string config_error(std::size_t lineno, const std::string& what) {
  return "config line " + std::to_string(lineno) + ": " + what;
}

json triple_json(const Triple& t) {
  return {{"necessity", t.necessity}, {"probability", t.probability}, {"possibility", t.possibility}};
}

Triple triple_from(const json& j) {
  return {j.at("necessity").get<double>(), j.at("probability").get<double>(),
          j.at("possibility").get<double>()};
}

json payload_json(const AgentMessage& m) {
  if (const auto* a = std::get_if<DetectionAlert>(&m.payload)) {
    json j = {{"timestamp", a->timestamp}, {"host", a->host}, {"src_ip", a->src_ip},
              {"dst_ip", a->dst_ip},       {"type", a->type}, {"low_confidence", a->low_confidence}};
    j.update(triple_json(a->triple));
    return j;
  }
  if (const auto* r = std::get_if<PredictionReport>(&m.payload)) {
    json rows = json::array();
    for (const auto& row : r->rows) {
      json jr = {{"hyper_alert", row.name}, {"informative", row.informative}, {"selected", row.selected}};
      jr.update(triple_json(row.triple));
      rows.push_back(std::move(jr));
    }
    return {{"observed", r->observed}, {"rows", rows}, {"predicted", r->ranked}};
  }
  return json::object();
}

/// The partial alert record the classifier sees: ports are not carried by
/// detection alerts and stay unobserved.
AlertRecord as_alert_record(const DetectionAlert& a) {
  auto observed = [](const std::string& s) { return s == "-" ? std::string() : s; };
  return {a.timestamp, a.host, observed(a.src_ip), "", observed(a.dst_ip), "", a.type};
}

}  // namespace

SimulationConfig parse_simulation_config(std::istream& in, const std::filesystem::path& base_dir) {
  SimulationConfig cfg;
  std::map<std::string, std::string> hosts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = text::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::parse, config_error(lineno, "expected key=value"));
    std::string key = text::trim(line.substr(0, eq));
    std::string value = text::trim(line.substr(eq + 1));
    if (value.empty()) fail(ErrorKind::parse, config_error(lineno, "empty value for '" + key + "'"));
    if (key == "detector") {
      cfg.detector_path = resolve(base_dir, value);
    } else if (key == "classifier") {
      cfg.classifier_path = resolve(base_dir, value);
    } else if (key == "plan") {
      cfg.plan_path = resolve(base_dir, value);
    } else if (key == "tau") {
      cfg.tau = text::parse_unit_interval(value);
      if (!cfg.tau) fail(ErrorKind::parse, config_error(lineno, "tau must lie in [0,1]"));
    } else if (key == "theta") {
      auto theta = text::parse_double(value);
      if (!theta || !(*theta >= 0.0)) fail(ErrorKind::parse, config_error(lineno, "theta must be >= 0"));
      cfg.rule.theta = *theta;
    } else if (key == "select") {
      if (value == "max") {
        cfg.rule.kind = SelectionRule::Kind::max;
      } else if (value == "threshold") {
        cfg.rule.kind = SelectionRule::Kind::threshold;
      } else {
        fail(ErrorKind::parse, config_error(lineno, "select must be max or threshold"));
      }
    } else if (key == "seed") {
      auto seed = text::parse_double(value);
      if (!seed || *seed < 0 || *seed != static_cast<double>(static_cast<std::uint64_t>(*seed))) {
        fail(ErrorKind::parse, config_error(lineno, "seed must be a non-negative integer"));
      }
      cfg.seed = static_cast<std::uint64_t>(*seed);
    } else if (key.rfind("host.", 0) == 0 && key.size() > 5) {
      std::string id = key.substr(5);
      if (!text::is_valid_label(id)) fail(ErrorKind::parse, config_error(lineno, "bad host id '" + id + "'"));
      if (!hosts.emplace(id, resolve(base_dir, value)).second) {
        fail(ErrorKind::parse, config_error(lineno, "host '" + id + "' defined twice"));
      }
    } else {
      fail(ErrorKind::parse, config_error(lineno, "unknown key '" + key + "'"));
    }
  }
  for (auto& [id, path] : hosts) cfg.hosts.push_back({id, path});
  if (cfg.hosts.empty()) fail(ErrorKind::parse, "config defines no host");
  if (cfg.detector_path.empty() || cfg.classifier_path.empty() || cfg.plan_path.empty()) {
    fail(ErrorKind::parse, "config needs detector, classifier and plan paths");
  }
  return cfg;
}

SimulationConfig load_simulation_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return parse_simulation_config(in, std::filesystem::path(path).parent_path());
}

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::alert: return "alert";
    case MessageKind::prediction: return "prediction";
    case MessageKind::shutdown: return "shutdown";
  }
  return "shutdown";
}

AgentMessage AgentMessage::alert(std::string sender, DetectionAlert a) {
  return {MessageKind::alert, std::move(sender), std::move(a)};
}

AgentMessage AgentMessage::prediction(std::string sender, PredictionReport r) {
  return {MessageKind::prediction, std::move(sender), std::move(r)};
}

AgentMessage AgentMessage::shutdown(std::string sender) {
  return {MessageKind::shutdown, std::move(sender), std::monostate{}};
}

IpaStep ipa_step(const IpaContext& context, IpaState state, const AgentMessage& message) {
  IpaStep step{std::move(state), {}};
  IpaState& s = step.state;
  if (s.terminated) return step;
  if (message.kind == MessageKind::shutdown) {
    s.terminated = true;
    return step;
  }
  const auto* alert = std::get_if<DetectionAlert>(&message.payload);
  if (message.kind != MessageKind::alert || !alert) {
    ++s.dropped;
    log_warn("prediction agent dropped a " + std::string(to_string(message.kind)) + " message from " +
             message.sender);
    return step;
  }
  ++s.alerts;
  auto c = classify_alert(*context.classifier, as_alert_record(*alert));
  log_debug("alert from " + alert->host + " classified as " + c.label);
  if (std::find(s.observed.begin(), s.observed.end(), c.label) != s.observed.end()) return step;
  s.observed.push_back(c.label);
  if (!context.plan->find(c.label)) {
    log_info("hyper-alert '" + c.label + "' is not part of the attack-plan model");
    return step;
  }
  s.evidence.push_back(c.label);
  auto report = predict_attacks(*context.plan, s.evidence, context.rule);
  s.last_prediction = report;
  step.emitted.push_back(AgentMessage::prediction(kIpaName, std::move(report)));
  return step;
}

SimulationResult run_simulation(const SimulationConfig& config) {
  if (config.hosts.empty()) fail(ErrorKind::invalid_argument, "simulation needs at least one host");
  DetectorModel detector = DetectorModel::load(config.detector_path);
  AlertClassifier classifier = AlertClassifier::load(config.classifier_path);
  PlanModel plan = PlanModel::load(config.plan_path);
  if (config.tau) {
    detector = DetectorModel(detector.features(), detector.class_column(), detector.rules(),
                             detector.network(), *config.tau);
    classifier = AlertClassifier(classifier.rules(), classifier.network(), *config.tau);
    plan = PlanModel(plan.network(), *config.tau);
  }

  struct Ida {
    std::string host;
    std::vector<StreamRecord> records;
    std::size_t next = 0;
  };
  std::vector<Ida> idas;
  for (const auto& h : config.hosts) {
    std::vector<std::string> problems;
    auto records = read_connection_stream_file(h.stream_path, &problems);
    for (const auto& p : problems) log_warn(h.id + ": " + p);
    idas.push_back({h.id, std::move(records), 0});
  }

  IpaContext context{&classifier, &plan, config.rule};
  SimulationResult result;
  std::deque<AgentMessage> ipa_queue;
  auto drain = [&] {
    while (!ipa_queue.empty()) {
      auto step = ipa_step(context, std::move(result.final_state), ipa_queue.front());
      ipa_queue.pop_front();
      result.final_state = std::move(step.state);
      for (auto& m : step.emitted) {
        result.predictions.push_back(std::get<PredictionReport>(m.payload));
        result.events.push_back(std::move(m));
      }
    }
  };

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> active;
  for (;;) {
    active.clear();
    for (std::size_t i = 0; i < idas.size(); ++i) {
      if (idas[i].next < idas[i].records.size()) active.push_back(i);
    }
    if (active.empty()) break;
    for (std::size_t i = active.size(); i > 1; --i) std::swap(active[i - 1], active[rng() % i]);
    for (std::size_t i : active) {
      Ida& ida = idas[i];
      std::vector<std::string> problems;
      auto alerts = detect_stream(detector, std::span(&ida.records[ida.next], 1), ida.host, &problems);
      ++ida.next;
      for (const auto& p : problems) log_warn(ida.host + ": " + p);
      for (auto& a : alerts) {
        auto m = AgentMessage::alert(ida.host, std::move(a));
        result.events.push_back(m);
        ipa_queue.push_back(std::move(m));
      }
      drain();
    }
  }
  for (const auto& ida : idas) ipa_queue.push_back(AgentMessage::shutdown(ida.host));
  drain();
  return result;
}

std::string message_to_json(const AgentMessage& message) {
  json j = {{"kind", to_string(message.kind)}, {"sender", message.sender}, {"payload", payload_json(message)}};
  return j.dump();
}

AgentMessage message_from_json(const std::string& line) {
  try {
    json j = json::parse(line);
    std::string kind = j.at("kind").get<std::string>();
    std::string sender = j.at("sender").get<std::string>();
    const json& p = j.at("payload");
    if (kind == "alert") {
      DetectionAlert a;
      a.timestamp = p.at("timestamp").get<double>();
      a.host = p.at("host").get<std::string>();
      a.src_ip = p.at("src_ip").get<std::string>();
      a.dst_ip = p.at("dst_ip").get<std::string>();
      a.type = p.at("type").get<std::string>();
      a.triple = triple_from(p);
      a.low_confidence = p.value("low_confidence", false);
      return AgentMessage::alert(sender, std::move(a));
    }
    if (kind == "prediction") {
      PredictionReport r;
      r.observed = p.at("observed").get<std::vector<std::string>>();
      r.ranked = p.at("predicted").get<std::vector<std::string>>();
      for (const auto& jr : p.at("rows")) {
        r.rows.push_back({jr.at("hyper_alert").get<std::string>(), triple_from(jr),
                          jr.at("informative").get<bool>(), jr.at("selected").get<bool>()});
      }
      return AgentMessage::prediction(sender, std::move(r));
    }
    if (kind == "shutdown") return AgentMessage::shutdown(sender);
    fail(ErrorKind::parse, "unknown message kind '" + kind + "'");
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed message: ") + e.what());
  }
}

void write_event_log(std::ostream& out, const std::vector<AgentMessage>& events) {
  for (const auto& m : events) out << message_to_json(m) << "\n";
}

std::vector<AgentMessage> read_event_log(std::istream& in) {
  std::vector<AgentMessage> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(message_from_json(line));
    } catch (const Error& e) {
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hidpas
