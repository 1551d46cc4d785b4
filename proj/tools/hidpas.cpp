// Command-line front end. Everything goes through the C interface.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hidpas/hidpas.h"

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

/// Raised by any failed library call; carries the library's message.
struct Failure {
  hidpas_status status;
  std::string message;
};

void check(hidpas_status status) {
  if (status != HIDPAS_OK) throw Failure{status, hidpas_last_error()};
}

struct StringDeleter {
  void operator()(char* s) const { hidpas_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

template <class T, void (*Free)(T*)>
struct HandleDeleter {
  void operator()(T* h) const { Free(h); }
};
using Detector = std::unique_ptr<hidpas_detector, HandleDeleter<hidpas_detector, hidpas_detector_free>>;
using Plan = std::unique_ptr<hidpas_plan, HandleDeleter<hidpas_plan, hidpas_plan_free>>;
using Classifier = std::unique_ptr<hidpas_classifier, HandleDeleter<hidpas_classifier, hidpas_classifier_free>>;

std::string take(char* s) {
  OwnedString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

struct Globals {
  bool no_timestamp = false;
};

void print_timestamp(const Globals& g) {
  if (g.no_timestamp) return;
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  std::cout << "# generated " << buf << "\n";
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{HIDPAS_IO, "cannot write '" + path + "'"};
  out << content;
  if (!out.flush()) throw Failure{HIDPAS_IO, "cannot write '" + path + "'"};
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// One distribution per call: prints the possibility and necessity lines.
void transform_one(const std::vector<double>& p) {
  std::vector<double> pi(p.size()), n(p.size());
  check(hidpas_transform(p.data(), p.size(), pi.data(), n.data()));
  auto line = [](const char* label, const std::vector<double>& xs) {
    std::cout << label;
    for (std::size_t i = 0; i < xs.size(); ++i) std::cout << (i ? " " : "") << format_number(xs[i]);
    std::cout << "\n";
  };
  line("pi: ", pi);
  line("N: ", n);
}

std::vector<double> parse_numbers(const std::string& line) {
  std::vector<double> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw Failure{HIDPAS_PARSE, "'" + token + "' is not a number"};
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid Bayesian-network intrusion detection and prediction."};
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals globals;
  app.add_flag("--no-timestamp", globals.no_timestamp, "Omit the '# generated' line from reports");

  // transform
  auto* transform = app.add_subcommand("transform", "Probability-to-possibility transform of a distribution");
  std::vector<double> probabilities;
  transform->add_option("probabilities", probabilities,
                        "Probabilities summing to 1; without them each stdin line is one distribution");

  // learn-detector
  auto* learn_detector = app.add_subcommand("learn-detector", "Train the host detection network");
  std::string train_path, detector_out, detector_order, labels = "category";
  hidpas_detector_options det;
  hidpas_detector_options_init(&det);
  bool skip_malformed = false;
  learn_detector->add_option("--train", train_path, "Training records (41 features + label)")->required()
      ->check(CLI::ExistingFile);
  learn_detector->add_option("--out", detector_out, "Model file to write")->required();
  learn_detector->add_option("--top-k", det.top_k, "Number of Gini-ranked features")->capture_default_str()
      ->check(CLI::PositiveNumber);
  learn_detector->add_option("--max-parents", det.max_parents, "K2 parent budget")->capture_default_str();
  learn_detector->add_option("--smoothing", det.smoothing, "Laplace pseudo-count")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  learn_detector->add_option("--tau", det.tau, "Informativeness threshold")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  learn_detector->add_option("--order", detector_order,
                             "K2 variable order, comma-separated (default: class, then features by rank)");
  learn_detector->add_option("--labels", labels, "Class granularity")->capture_default_str()
      ->check(CLI::IsMember({"category", "attack"}));
  learn_detector->add_flag("--skip-malformed", skip_malformed, "Skip bad training rows instead of failing");

  // detect
  auto* detect = app.add_subcommand("detect", "Classify a connection stream and emit alerts");
  std::string detect_model, detect_input, detect_host = "host", detect_out;
  detect->add_option("--model", detect_model, "Detector model file")->required();
  detect->add_option("--input", detect_input, "Connection stream")->required();
  detect->add_option("--host", detect_host, "Host name recorded in alerts")->capture_default_str();
  detect->add_option("--out", detect_out, "Alert CSV (default: stdout)");

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Aggregate an alert log into hyper-alerts");
  std::string agg_alerts, agg_out, merge_key = "attack_type";
  const std::vector<std::string> merge_keys{"none", "attack_type", "sensor", "src_ip", "dst_ip", "dst_port"};
  aggregate->add_option("--alerts", agg_alerts, "Alert log CSV")->required();
  aggregate->add_option("--merge-key", merge_key, "Attribute merging phase-one clusters")->capture_default_str()
      ->check(CLI::IsMember(merge_keys));
  aggregate->add_option("--out", agg_out, "Hyper-alert CSV (default: stdout)");

  // learn-plan
  auto* learn_plan = app.add_subcommand("learn-plan", "Train the attack-plan network from an alert log");
  std::string plan_alerts, plan_out, classifier_out, plan_order, plan_merge = "attack_type";
  hidpas_plan_options plan_opts;
  hidpas_plan_options_init(&plan_opts);
  plan_opts.slot = 60.0;
  std::optional<double> plan_start, plan_range;
  learn_plan->add_option("--alerts", plan_alerts, "Alert log CSV")->required();
  learn_plan->add_option("--out", plan_out, "Plan model file to write")->required();
  learn_plan->add_option("--classifier-out", classifier_out, "Also write the hyper-alert classifier here");
  learn_plan->add_option("--slot", plan_opts.slot, "Time-slot width in seconds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  learn_plan->add_option("--start", plan_start, "First slot start (default: earliest alert)");
  learn_plan->add_option("--range", plan_range, "Total time range T (default: covers the latest alert)");
  learn_plan->add_option("--order", plan_order, "K2 order of hyper-alert names (default: by first occurrence)");
  learn_plan->add_option("--merge-key", plan_merge, "Attribute merging phase-one clusters")->capture_default_str()
      ->check(CLI::IsMember(merge_keys));
  learn_plan->add_option("--max-parents", plan_opts.max_parents, "K2 parent budget")->capture_default_str();
  learn_plan->add_option("--smoothing", plan_opts.smoothing, "Laplace pseudo-count")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  learn_plan->add_option("--tau", plan_opts.tau, "Informativeness threshold")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  // predict
  auto* predict = app.add_subcommand("predict", "Predict the next attack steps from observed hyper-alerts");
  std::string predict_model, observed, select = "max";
  double theta = 0.5;
  bool show_edges = false;
  predict->add_option("--model", predict_model, "Plan model file")->required();
  predict->add_option("--observed", observed, "Observed hyper-alerts, comma-separated");
  predict->add_option("--select", select, "Selection rule")->capture_default_str()
      ->check(CLI::IsMember({"max", "threshold"}));
  predict->add_option("--theta", theta, "Probability threshold for --select threshold")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  predict->add_flag("--edges", show_edges, "Also print the N/P/Π strength of every plan edge");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run the detection/prediction agent simulation");
  std::string sim_config, sim_log;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--config", sim_config, "Simulation config (key=value lines)")->required();
  simulate->add_option("--seed", sim_seed, "Scheduler seed (default: the config's seed)");
  simulate->add_option("--log", sim_log, "NDJSON event log (default: stdout, after the summary)");

  // oracle-check
  auto* oracle = app.add_subcommand("oracle-check", "Run the brute-force oracle suites");
  std::uint64_t oracle_seed = 1;
  std::size_t networks = 200;
  oracle->add_option("--seed", oracle_seed, "Random seed")->capture_default_str();
  oracle->add_option("--networks", networks, "Random networks to check")->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (transform->parsed()) {
      if (!probabilities.empty()) {
        transform_one(probabilities);
      } else {
        std::string line;
        while (std::getline(std::cin, line)) {
          auto p = parse_numbers(line);
          if (!p.empty()) transform_one(p);
        }
      }
    } else if (learn_detector->parsed()) {
      det.order = detector_order.empty() ? nullptr : detector_order.c_str();
      det.attack_labels = labels == "attack";
      det.skip_malformed = skip_malformed;
      hidpas_detector* raw = nullptr;
      check(hidpas_detector_train(train_path.c_str(), &det, &raw));
      Detector model(raw);
      check(hidpas_detector_save(model.get(), detector_out.c_str()));
      char* text = nullptr;
      check(hidpas_detector_describe(model.get(), &text));
      print_timestamp(globals);
      std::cout << take(text);
    } else if (detect->parsed()) {
      hidpas_detector* raw = nullptr;
      check(hidpas_detector_load(detect_model.c_str(), &raw));
      Detector model(raw);
      char* csv = nullptr;
      std::size_t count = 0;
      check(hidpas_detect(model.get(), detect_input.c_str(), detect_host.c_str(), &csv, &count));
      write_output(detect_out, take(csv));
      if (!detect_out.empty()) std::cerr << count << " alert(s) written to " << detect_out << "\n";
    } else if (aggregate->parsed()) {
      char* csv = nullptr;
      std::size_t hyper = 0, phase_one = 0;
      check(hidpas_aggregate(agg_alerts.c_str(), merge_key.c_str(), &csv, &hyper, &phase_one));
      write_output(agg_out, take(csv));
      std::cerr << hyper << " hyper-alert(s) from " << phase_one << " phase-one cluster(s)\n";
    } else if (learn_plan->parsed()) {
      plan_opts.merge_key = plan_merge.c_str();
      plan_opts.order = plan_order.empty() ? nullptr : plan_order.c_str();
      plan_opts.has_start = plan_start.has_value();
      plan_opts.start = plan_start.value_or(0.0);
      plan_opts.has_range = plan_range.has_value();
      plan_opts.range = plan_range.value_or(0.0);
      hidpas_plan* raw_plan = nullptr;
      hidpas_classifier* raw_classifier = nullptr;
      check(hidpas_plan_train(plan_alerts.c_str(), &plan_opts, &raw_plan,
                              classifier_out.empty() ? nullptr : &raw_classifier));
      Plan model(raw_plan);
      Classifier classifier(raw_classifier);
      check(hidpas_plan_save(model.get(), plan_out.c_str()));
      if (classifier) check(hidpas_classifier_save(classifier.get(), classifier_out.c_str()));
      char* text = nullptr;
      check(hidpas_plan_describe(model.get(), &text));
      print_timestamp(globals);
      std::cout << take(text);
    } else if (predict->parsed()) {
      hidpas_plan* raw = nullptr;
      check(hidpas_plan_load(predict_model.c_str(), &raw));
      Plan model(raw);
      char* report = nullptr;
      auto rule = select == "max" ? HIDPAS_SELECT_MAX : HIDPAS_SELECT_THRESHOLD;
      check(hidpas_plan_predict(model.get(), observed.c_str(), rule, theta, &report));
      std::string edges;
      if (show_edges) {
        char* csv = nullptr;
        check(hidpas_plan_edges(model.get(), &csv));
        edges = take(csv);
      }
      print_timestamp(globals);
      std::cout << take(report) << edges;
    } else if (simulate->parsed()) {
      char* events = nullptr;
      char* summary = nullptr;
      check(hidpas_simulate(sim_config.c_str(), sim_seed.has_value(), sim_seed.value_or(0), &events, &summary));
      std::string log = take(events);
      std::string text = take(summary);
      if (!sim_log.empty()) write_output(sim_log, log);
      print_timestamp(globals);
      std::cout << text;
      if (sim_log.empty()) std::cout << log;
    } else if (oracle->parsed()) {
      auto t0 = std::chrono::steady_clock::now();
      char* summary = nullptr;
      int passed = 0;
      check(hidpas_oracle_check(oracle_seed, networks, &summary, &passed));
      print_timestamp(globals);
      std::cout << take(summary);
      if (!globals.no_timestamp) {
        std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
        std::cout << "# elapsed " << elapsed.count() << " s\n";
      }
      if (!passed) return kExitData;
    }
  } catch (const Failure& f) {
    std::cerr << "hidpas: " << hidpas_status_name(f.status) << ": " << f.message << "\n";
    return kExitData;
  }
  return 0;
}
