#include "hidpas/hidpas.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "hidpas/agents.hpp"
#include "hidpas/error.hpp"
#include "hidpas/log.hpp"
#include "hidpas/oracle.hpp"
#include "hidpas/prediction.hpp"
#include "hidpas/text.hpp"

struct hidpas_network {
  hidpas::HybridEngine engine;
};

struct hidpas_detector {
  hidpas::DetectorModel model;
};

struct hidpas_plan {
  hidpas::PlanModel model;
};

struct hidpas_classifier {
  hidpas::AlertClassifier model;
};

namespace {

using namespace hidpas;

thread_local std::string last_error;

hidpas_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return HIDPAS_INVALID_ARGUMENT;
    case ErrorKind::io: return HIDPAS_IO;
    case ErrorKind::parse: return HIDPAS_PARSE;
    case ErrorKind::data: return HIDPAS_DATA;
    case ErrorKind::impossible_evidence: return HIDPAS_IMPOSSIBLE_EVIDENCE;
    case ErrorKind::internal: return HIDPAS_INTERNAL;
  }
  return HIDPAS_INTERNAL;
}

template <class F>
hidpas_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return HIDPAS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HIDPAS_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HIDPAS_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return HIDPAS_INTERNAL;
  }
}

void require(bool condition, const char* what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> name_list(const char* csv) {
  std::vector<std::string> out;
  if (!csv) return out;
  for (auto& item : text::split(csv, ',')) {
    auto t = text::trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string edge_list(const BayesNet& net) {
  std::vector<std::string> items;
  for (auto [from, to] : net.dag().edges()) items.push_back(net.variable(from).name + "->" + net.variable(to).name);
  return items.empty() ? "-" : text::join(items, ',');
}

MergeKey merge_key_of(const char* text) {
  if (!text) return MergeKey::attack_type;
  auto key = parse_merge_key(text);
  if (!key) fail(ErrorKind::invalid_argument, std::string("unknown merge key '") + text + "'");
  return *key;
}

}  // namespace

extern "C" {

const char* hidpas_version(void) { return "0.1.0"; }

const char* hidpas_status_name(hidpas_status status) {
  switch (status) {
    case HIDPAS_OK: return "ok";
    case HIDPAS_INVALID_ARGUMENT: return "invalid argument";
    case HIDPAS_IO: return "i/o error";
    case HIDPAS_PARSE: return "parse error";
    case HIDPAS_DATA: return "data error";
    case HIDPAS_IMPOSSIBLE_EVIDENCE: return "impossible evidence";
    case HIDPAS_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* hidpas_last_error(void) { return last_error.c_str(); }

void hidpas_string_free(char* s) { std::free(s); }

hidpas_status hidpas_set_log_level(const char* level) {
  return guarded([&] {
    require(level, "level is null");
    LogLevel parsed;
    if (!parse_log_level(level, parsed)) fail(ErrorKind::invalid_argument, std::string("unknown log level '") + level + "'");
    set_log_level(parsed);
  });
}

hidpas_status hidpas_transform(const double* probabilities, size_t n, double* possibility, double* necessity_out) {
  return guarded([&] {
    require(probabilities && possibility && necessity_out, "null buffer");
    auto pi = prob_to_poss(std::span<const double>(probabilities, n));
    auto nec = necessity(pi);
    std::copy(pi.begin(), pi.end(), possibility);
    std::copy(nec.begin(), nec.end(), necessity_out);
  });
}

hidpas_status hidpas_network_load(const char* path, hidpas_network** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hidpas_network{HybridEngine(load_model(path).net)};
  });
}

void hidpas_network_free(hidpas_network* net) { delete net; }

size_t hidpas_network_size(const hidpas_network* net) { return net ? net->engine.network().size() : 0; }

hidpas_status hidpas_network_query(const hidpas_network* net, const char* evidence, const char* target,
                                   char** report) {
  return guarded([&] {
    require(net && target && report, "null argument");
    const BayesNet& bn = net->engine.network();
    auto find = [&](const std::string& name) {
      auto v = bn.dag().find(name);
      if (!v) fail(ErrorKind::invalid_argument, "unknown variable '" + name + "'");
      return *v;
    };
    Evidence ev;
    for (const auto& item : name_list(evidence)) {
      auto eq = item.find('=');
      if (eq == std::string::npos) fail(ErrorKind::invalid_argument, "evidence '" + item + "' is not name=state");
      VarId v = find(text::trim(item.substr(0, eq)));
      const auto& states = bn.variable(v).states;
      auto state = text::trim(item.substr(eq + 1));
      auto it = std::find(states.begin(), states.end(), state);
      if (it == states.end()) fail(ErrorKind::invalid_argument, "unknown state '" + state + "'");
      ev[v] = static_cast<StateIndex>(it - states.begin());
    }
    auto m = net->engine.query(ev, find(target));
    std::string out;
    for (StateIndex k = 0; k < m.arity(); ++k) {
      out += bn.variable(m.variable).states[k] + " " + format_probability(m.necessity[k]) + " " +
             format_probability(m.probability[k]) + " " + format_probability(m.possibility[k]) + "\n";
    }
    *report = duplicate(out);
  });
}

void hidpas_detector_options_init(hidpas_detector_options* options) {
  if (!options) return;
  DetectorConfig d;
  *options = {d.top_k, d.max_parents, d.smoothing, d.tau, nullptr, 0, 0};
}

hidpas_status hidpas_detector_train(const char* training_path, const hidpas_detector_options* options,
                                    hidpas_detector** out) {
  return guarded([&] {
    require(training_path && out, "null argument");
    *out = nullptr;
    hidpas_detector_options opts;
    hidpas_detector_options_init(&opts);
    if (options) opts = *options;
    LoadReport load;
    auto table = load_kdd_file(training_path, opts.skip_malformed ? MalformedRows::skip : MalformedRows::abort, &load);
    for (const auto& p : load.problems) log_warn(std::string(training_path) + ": " + p);
    DetectorConfig cfg;
    cfg.top_k = opts.top_k;
    cfg.max_parents = opts.max_parents;
    cfg.smoothing = opts.smoothing;
    cfg.tau = opts.tau;
    cfg.order = name_list(opts.order);
    cfg.granularity = opts.attack_labels ? LabelGranularity::attack : LabelGranularity::category;
    *out = new hidpas_detector{train_detector(table, cfg)};
  });
}

hidpas_status hidpas_detector_load(const char* path, hidpas_detector** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hidpas_detector{DetectorModel::load(path)};
  });
}

hidpas_status hidpas_detector_save(const hidpas_detector* detector, const char* path) {
  return guarded([&] {
    require(detector && path, "null argument");
    detector->model.save(path);
  });
}

void hidpas_detector_free(hidpas_detector* detector) { delete detector; }

hidpas_status hidpas_detector_describe(const hidpas_detector* detector, char** out) {
  return guarded([&] {
    require(detector && out, "null argument");
    const auto& m = detector->model;
    const auto& cls = m.network().variable(m.class_variable());
    std::string s = "features: " + text::join(m.features(), ',') + "\n";
    s += "class: " + m.class_column() + " (" + text::join(cls.states, ',') + ")\n";
    s += "edges: " + edge_list(m.network()) + "\n";
    s += "tau: " + text::format_number(m.tau()) + "\n";
    *out = duplicate(s);
  });
}

hidpas_status hidpas_detect(const hidpas_detector* detector, const char* stream_path, const char* host,
                            char** alerts_csv, size_t* alert_count) {
  return guarded([&] {
    require(detector && stream_path && alerts_csv, "null argument");
    std::vector<std::string> problems;
    auto records = read_connection_stream_file(stream_path, &problems);
    auto alerts = detect_stream(detector->model, records, host ? host : "host", &problems);
    for (const auto& p : problems) log_warn(std::string(stream_path) + ": " + p);
    std::ostringstream csv;
    write_alerts_csv(csv, alerts);
    *alerts_csv = duplicate(csv.str());
    if (alert_count) *alert_count = alerts.size();
  });
}

hidpas_status hidpas_aggregate(const char* alert_log_path, const char* merge_key, char** hyper_csv,
                               size_t* hyper_count, size_t* phase_one_count) {
  return guarded([&] {
    require(alert_log_path && hyper_csv, "null argument");
    auto agg = aggregate_alerts(read_alert_log_file(alert_log_path), merge_key_of(merge_key));
    std::ostringstream csv;
    write_hyper_alerts_csv(csv, agg.hyper_alerts);
    *hyper_csv = duplicate(csv.str());
    if (hyper_count) *hyper_count = agg.hyper_alerts.size();
    if (phase_one_count) *phase_one_count = agg.phase_one_count;
  });
}

void hidpas_plan_options_init(hidpas_plan_options* options) {
  if (!options) return;
  PlanConfig p;
  *options = {nullptr, 0.0, 0, 0.0, 0, 0.0, nullptr, p.max_parents, p.smoothing, p.tau};
}

hidpas_status hidpas_plan_train(const char* alert_log_path, const hidpas_plan_options* options, hidpas_plan** plan,
                                hidpas_classifier** classifier) {
  return guarded([&] {
    require(alert_log_path && options && plan, "null argument");
    *plan = nullptr;
    if (classifier) *classifier = nullptr;
    auto log = read_alert_log_file(alert_log_path);
    auto agg = aggregate_alerts(log, merge_key_of(options->merge_key));
    log_info("aggregated " + std::to_string(log.size()) + " alerts into " +
             std::to_string(agg.hyper_alerts.size()) + " hyper-alerts");
    auto tm = build_transactions(agg.hyper_alerts, options->slot,
                                 options->has_start ? std::optional(options->start) : std::nullopt,
                                 options->has_range ? std::optional(options->range) : std::nullopt);
    PlanConfig cfg;
    cfg.order = name_list(options->order);
    cfg.max_parents = options->max_parents;
    cfg.smoothing = options->smoothing;
    cfg.tau = options->tau;
    auto model = std::make_unique<hidpas_plan>(hidpas_plan{train_plan_model(tm, cfg)});
    if (classifier) {
      std::vector<std::string> labels;
      for (auto h : agg.assignment) labels.push_back(tm.names[h]);
      ClassifierConfig cc;
      cc.max_parents = options->max_parents;
      cc.smoothing = options->smoothing;
      cc.tau = options->tau;
      *classifier = new hidpas_classifier{train_alert_classifier(log, labels, cc)};
    }
    *plan = model.release();
  });
}

hidpas_status hidpas_plan_load(const char* path, hidpas_plan** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hidpas_plan{PlanModel::load(path)};
  });
}

hidpas_status hidpas_plan_save(const hidpas_plan* plan, const char* path) {
  return guarded([&] {
    require(plan && path, "null argument");
    plan->model.save(path);
  });
}

void hidpas_plan_free(hidpas_plan* plan) { delete plan; }

hidpas_status hidpas_plan_describe(const hidpas_plan* plan, char** out) {
  return guarded([&] {
    require(plan && out, "null argument");
    const BayesNet& net = plan->model.network();
    std::vector<VarId> all;
    for (VarId v = 0; v < net.size(); ++v) all.push_back(v);
    auto prior = plan->model.engine().query({}, all);
    std::string s = "hyper_alert  N  P  Π\n";
    for (const auto& m : prior) {
      auto t = m.triple(1);
      s += net.variable(m.variable).name + "  " + format_probability(t.necessity) + "  " +
           format_probability(t.probability) + "  " + format_probability(t.possibility) + "\n";
    }
    s += "edges: " + edge_list(net) + "\n";
    *out = duplicate(s);
  });
}

hidpas_status hidpas_plan_predict(const hidpas_plan* plan, const char* observed, hidpas_selection selection,
                                  double theta, char** report) {
  return guarded([&] {
    require(plan && report, "null argument");
    require(selection == HIDPAS_SELECT_MAX || selection == HIDPAS_SELECT_THRESHOLD, "unknown selection rule");
    SelectionRule rule;
    rule.kind = selection == HIDPAS_SELECT_MAX ? SelectionRule::Kind::max : SelectionRule::Kind::threshold;
    rule.theta = theta;
    auto names = name_list(observed);
    *report = duplicate(format_prediction_report(predict_attacks(plan->model, names, rule)));
  });
}

hidpas_status hidpas_plan_edges(const hidpas_plan* plan, char** csv) {
  return guarded([&] {
    require(plan && csv, "null argument");
    std::string s = "from,to,necessity,probability,possibility\n";
    for (const auto& e : correlation_edges(plan->model)) {
      s += e.from + "," + e.to + "," + format_probability(e.strength.necessity) + "," +
           format_probability(e.strength.probability) + "," + format_probability(e.strength.possibility) + "\n";
    }
    *csv = duplicate(s);
  });
}

hidpas_status hidpas_classifier_load(const char* path, hidpas_classifier** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hidpas_classifier{AlertClassifier::load(path)};
  });
}

hidpas_status hidpas_classifier_save(const hidpas_classifier* classifier, const char* path) {
  return guarded([&] {
    require(classifier && path, "null argument");
    classifier->model.save(path);
  });
}

void hidpas_classifier_free(hidpas_classifier* classifier) { delete classifier; }

hidpas_status hidpas_simulate(const char* config_path, int has_seed, uint64_t seed, char** events,
                              char** summary) {
  return guarded([&] {
    require(config_path && events, "null argument");
    auto cfg = load_simulation_config(config_path);
    if (has_seed) cfg.seed = seed;
    auto result = run_simulation(cfg);
    std::ostringstream log;
    write_event_log(log, result.events);
    if (summary) {
      const auto& s = result.final_state;
      std::string text = "hosts: " + std::to_string(cfg.hosts.size()) + "\n";
      text += "alerts: " + std::to_string(s.alerts) + "\n";
      text += "predictions: " + std::to_string(result.predictions.size()) + "\n";
      text += "hyper_alerts_seen: " + (s.observed.empty() ? std::string("-") : text::join(s.observed, ',')) + "\n";
      if (s.last_prediction) text += format_prediction_report(*s.last_prediction);
      *summary = duplicate(text);
    }
    *events = duplicate(log.str());
  });
}

hidpas_status hidpas_oracle_check(uint64_t seed, size_t networks, char** summary, int* passed) {
  return guarded([&] {
    require(summary && passed, "null argument");
    auto inference = oracle::run_inference_oracles(seed, networks);
    auto transform = oracle::run_transform_oracles(seed, 1000);
    auto k2 = oracle::run_k2_oracles(seed);
    bool k2_ok = k2.score_failures == 0 && k2.chain_recovered * 20 >= k2.chain_datasets * 19;
    *passed = inference.ok() && transform.ok() && k2_ok;
    std::string s = "inference: " + inference.summary(false) + (inference.ok() ? " PASS" : " FAIL") + "\n";
    s += "transform: " + transform.summary(false) + (transform.ok() ? " PASS" : " FAIL") + "\n";
    s += "k2: " + k2.summary(false) + (k2_ok ? " PASS" : " FAIL") + "\n";
    *summary = duplicate(s);
  });
}

}  // extern "C"
