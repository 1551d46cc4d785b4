#pragma once

// Host-level intrusion detection: a K2-learned connection classifier whose
// decisions are filtered by the width of the necessity/possibility bracket.

#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hidpas/features.hpp"
#include "hidpas/possibility.hpp"

namespace hidpas {

inline constexpr const char* kNormalLabel = "normal";

struct DetectorConfig {
  std::string class_column = kKddLabelColumn;
  std::size_t top_k = 9;
  /// Column names giving the K2 order. Empty: class first, then the
  /// selected features in ranking order.
  std::vector<std::string> order;
  std::size_t max_parents = 2;
  double smoothing = 1.0;
  double tau = kDefaultTau;
  LabelGranularity granularity = LabelGranularity::category;
};

/// Immutable trained detector. Variables are the selected features in
/// ranking order followed by the class.
class DetectorModel {
 public:
  DetectorModel(std::vector<std::string> features, std::string class_column, FeatureRules rules,
                BayesNet net, double tau);

  const std::vector<std::string>& features() const noexcept { return features_; }
  const std::string& class_column() const noexcept { return class_column_; }
  const FeatureRules& rules() const noexcept { return rules_; }
  const BayesNet& network() const noexcept { return engine_->network(); }
  const HybridEngine& engine() const noexcept { return *engine_; }
  VarId class_variable() const noexcept { return features_.size(); }
  double tau() const noexcept { return tau_; }
  /// Position of each feature within a 41-field connection record.
  const std::vector<std::size_t>& record_positions() const noexcept { return positions_; }

  ModelFile to_model_file() const;
  static DetectorModel from_model_file(const ModelFile& file);
  void save(const std::string& path) const;
  static DetectorModel load(const std::string& path);

 private:
  std::vector<std::string> features_;
  std::string class_column_;
  FeatureRules rules_;
  std::shared_ptr<const HybridEngine> engine_;
  double tau_;
  std::vector<std::size_t> positions_;
};

DetectorModel train_detector(const RawTable& table, const DetectorConfig& config);

/// The 41 raw feature values in connection-record order; a 42nd label field
/// is tolerated and ignored. Empty or "?" values are treated as unobserved.
struct ConnectionRecord {
  std::vector<std::string> fields;
};

struct Classification {
  StateIndex state = 0;
  std::string label;
  HybridMarginal marginal;
  bool low_confidence = false;
  /// The record's evidence had probability 0; the result is the prior.
  bool impossible_evidence = false;
};

/// Throws data when a numeric field cannot be parsed.
Classification classify_connection(const DetectorModel& model, const ConnectionRecord& record);

/// One record of a host's connection stream with its metadata.
struct StreamRecord {
  double timestamp = 0.0;
  std::string src_ip = "-";
  std::string dst_ip = "-";
  ConnectionRecord record;
  std::size_t line = 0;
};

/// Lines of 41/42 fields are plain records stamped with their 0-based
/// sequence number; lines of 44/45 fields carry a leading
/// `timestamp,src_ip,dst_ip`. Bad lines are reported and skipped.
std::vector<StreamRecord> read_connection_stream(std::istream& in,
                                                 std::vector<std::string>* problems = nullptr);
std::vector<StreamRecord> read_connection_stream_file(const std::string& path,
                                                      std::vector<std::string>* problems = nullptr);

struct DetectionAlert {
  double timestamp = 0.0;
  std::string host;
  std::string src_ip;
  std::string dst_ip;
  std::string type;
  Triple triple;
  bool low_confidence = false;

  bool operator==(const DetectionAlert&) const = default;
};

/// One alert per record not classified as normal, in input order. Records
/// that fail to classify are reported and skipped.
std::vector<DetectionAlert> detect_stream(const DetectorModel& model,
                                          std::span<const StreamRecord> records,
                                          const std::string& host,
                                          std::vector<std::string>* problems = nullptr);

inline constexpr const char* kAlertCsvHeader =
    "timestamp,host,src_ip,dst_ip,type,necessity,probability,possibility";

void write_alerts_csv(std::ostream& out, std::span<const DetectionAlert> alerts);
std::vector<DetectionAlert> read_alerts_csv(std::istream& in);

}  // namespace hidpas
