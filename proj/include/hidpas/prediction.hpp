#pragma once

// Network-level intrusion prediction: alert aggregation into hyper-alerts,
// hyper-alert classification, time-slot transactions and the attack-plan
// network used to predict the next steps of an attack.

#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hidpas/detection.hpp"

namespace hidpas {

struct AlertRecord {
  double timestamp = 0.0;
  std::string sensor;
  std::string src_ip;
  std::string src_port;
  std::string dst_ip;
  std::string dst_port;
  std::string attack_type;
};

inline constexpr const char* kAlertLogHeader = "timestamp,sensor,src_ip,src_port,dst_ip,dst_port,attack_type";

/// Reads the alert log CSV; the header line is required. Throws parse with
/// the line number on malformed rows.
std::vector<AlertRecord> read_alert_log(std::istream& in);
std::vector<AlertRecord> read_alert_log_file(const std::string& path);
void write_alert_log(std::ostream& out, std::span<const AlertRecord> alerts);

struct HyperAlert {
  std::size_t id = 0;  // 1-based, first-occurrence order
  std::string name;
  AlertRecord representative;         // attributes of the first member
  std::vector<std::size_t> members;   // indices into the input log
  std::vector<double> timestamps;

  std::size_t size() const noexcept { return members.size(); }
  double earliest() const;
};

/// Which attribute merges the phase-one clusters; `none` stops after phase one.
enum class MergeKey { none, attack_type, sensor, src_ip, dst_ip, dst_port };

std::optional<MergeKey> parse_merge_key(const std::string& text);

struct Aggregation {
  std::vector<HyperAlert> hyper_alerts;
  std::vector<std::size_t> assignment;  // per input alert, index into hyper_alerts
  std::size_t phase_one_count = 0;
};

/// Phase one groups alerts equal in every attribute but the timestamp; phase
/// two merges those groups sharing the merge key. Names are the merge-key
/// value, or `<attack_type>#<id>` when stopping after phase one.
Aggregation aggregate_alerts(std::span<const AlertRecord> log, MergeKey merge = MergeKey::attack_type);

void write_hyper_alerts_csv(std::ostream& out, std::span<const HyperAlert> hyper_alerts);

struct ClassifierConfig {
  std::size_t max_parents = 2;
  double smoothing = 1.0;
  double tau = kDefaultTau;
};

/// Maps alert attributes (source/destination address and port, attack
/// type) to a hyper-alert name.
class AlertClassifier {
 public:
  AlertClassifier(FeatureRules rules, BayesNet net, double tau);

  static const std::vector<std::string>& attributes();
  static constexpr const char* kClassColumn = "hyper_alert";

  const FeatureRules& rules() const noexcept { return rules_; }
  const BayesNet& network() const noexcept { return engine_->network(); }
  const HybridEngine& engine() const noexcept { return *engine_; }
  VarId class_variable() const noexcept { return attributes().size(); }
  double tau() const noexcept { return tau_; }

  ModelFile to_model_file() const;
  static AlertClassifier from_model_file(const ModelFile& file);
  void save(const std::string& path) const;
  static AlertClassifier load(const std::string& path);

 private:
  FeatureRules rules_;
  std::shared_ptr<const HybridEngine> engine_;
  double tau_;
};

/// `labels[i]` is the hyper-alert name of `alerts[i]`.
AlertClassifier train_alert_classifier(std::span<const AlertRecord> alerts,
                                       std::span<const std::string> labels,
                                       const ClassifierConfig& config = {});

/// Empty attribute strings are left unobserved.
Classification classify_alert(const AlertClassifier& classifier, const AlertRecord& alert);

struct TransactionMatrix {
  double start = 0.0;
  double range = 0.0;  // T
  double slot = 0.0;   // Δt
  std::size_t slots = 0;
  std::vector<std::string> names;
  std::vector<double> earliest;
  /// occurrences[h][i] is 1 iff hyper-alert h has a member in slot i.
  std::vector<std::vector<std::uint8_t>> occurrences;
  std::size_t ignored = 0;  // member timestamps outside [start, start + T)
};

/// Slot i covers [start + iΔt, start + (i+1)Δt). By default start is the
/// earliest member timestamp and T the smallest multiple of Δt that covers
/// the latest one.
TransactionMatrix build_transactions(std::span<const HyperAlert> hyper_alerts, double slot,
                                     std::optional<double> start = std::nullopt,
                                     std::optional<double> range = std::nullopt);

inline constexpr const char* kAbsent = "absent";
inline constexpr const char* kPresent = "present";

/// Rows are slots, columns binary hyper-alert indicators.
DiscreteDataset transactions_dataset(const TransactionMatrix& tm);

struct PlanConfig {
  std::vector<std::string> order;  // empty: earliest occurrence first
  std::size_t max_parents = 2;
  double smoothing = 1.0;
  double tau = kDefaultTau;
};

class PlanModel {
 public:
  PlanModel(BayesNet net, double tau);

  const BayesNet& network() const noexcept { return engine_->network(); }
  const HybridEngine& engine() const noexcept { return *engine_; }
  double tau() const noexcept { return tau_; }
  std::optional<VarId> find(const std::string& name) const { return network().dag().find(name); }

  ModelFile to_model_file() const;
  static PlanModel from_model_file(const ModelFile& file);
  void save(const std::string& path) const;
  static PlanModel load(const std::string& path);

 private:
  std::shared_ptr<const HybridEngine> engine_;
  double tau_;
};

PlanModel train_plan_model(const TransactionMatrix& tm, const PlanConfig& config = {});

struct SelectionRule {
  enum class Kind { max, threshold } kind = Kind::max;
  double theta = 0.5;
};

struct PredictionRow {
  std::string name;
  Triple triple;  // of the `present` state
  bool informative = false;
  bool selected = false;

  bool operator==(const PredictionRow&) const = default;
};

struct PredictionReport {
  std::vector<std::string> observed;
  std::vector<PredictionRow> rows;   // unobserved hyper-alerts in model order
  std::vector<std::string> ranked;   // selected names, P descending

  bool operator==(const PredictionReport&) const = default;
};

/// Asserts every observed hyper-alert as present and reports the occurrence
/// triple of each other node. Throws invalid_argument for unknown names.
PredictionReport predict_attacks(const PlanModel& model, std::span<const std::string> observed,
                                 const SelectionRule& rule);

/// Text table with a `hyper_alert  N  P  Π  informative  selected` header.
std::string format_prediction_report(const PredictionReport& report);

struct CorrelationEdge {
  std::string from;
  std::string to;
  Triple strength;  // of P(to present | from present)
};

std::vector<CorrelationEdge> correlation_edges(const PlanModel& model);

}  // namespace hidpas
