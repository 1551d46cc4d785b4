#pragma once

// Two-layer agent simulation: one detection agent per host feeds alerts to a
// single prediction agent. Agents are logical actors in one process that
// exchange messages through ordered queues under a seeded scheduler.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "hidpas/prediction.hpp"

namespace hidpas {

struct HostDefinition {
  std::string id;
  std::string stream_path;
};

struct SimulationConfig {
  std::vector<HostDefinition> hosts;  // sorted by id
  std::string detector_path;
  std::string classifier_path;
  std::string plan_path;
  std::optional<double> tau;  // overrides the tau stored in each model
  SelectionRule rule;
  std::uint64_t seed = 0;
};

/// key=value lines; '#' starts a comment. Keys: detector, classifier, plan,
/// tau, select (max|threshold), theta, seed and host.<id>. Relative paths are
/// resolved against `base_dir`.
SimulationConfig parse_simulation_config(std::istream& in, const std::filesystem::path& base_dir = {});
SimulationConfig load_simulation_config(const std::string& path);

enum class MessageKind { alert, prediction, shutdown };

const char* to_string(MessageKind kind);

struct AgentMessage {
  MessageKind kind = MessageKind::shutdown;
  std::string sender;
  std::variant<std::monostate, DetectionAlert, PredictionReport> payload;

  static AgentMessage alert(std::string sender, DetectionAlert a);
  static AgentMessage prediction(std::string sender, PredictionReport r);
  static AgentMessage shutdown(std::string sender);

  bool operator==(const AgentMessage&) const = default;
};

inline constexpr const char* kIpaName = "ipa";

/// Read-only models the prediction agent consults.
struct IpaContext {
  const AlertClassifier* classifier = nullptr;
  const PlanModel* plan = nullptr;
  SelectionRule rule;
};

struct IpaState {
  std::size_t alerts = 0;
  std::size_t dropped = 0;
  std::vector<std::string> observed;   // distinct hyper-alerts, first-seen order
  std::vector<std::string> evidence;   // the observed ones known to the plan model
  std::optional<PredictionReport> last_prediction;
  bool terminated = false;

  bool operator==(const IpaState&) const = default;
};

struct IpaStep {
  IpaState state;
  std::vector<AgentMessage> emitted;
};

/// Classifies an alert into a hyper-alert and, the first time that
/// hyper-alert is seen, runs prediction. A shutdown terminates the agent;
/// anything else is dropped.
IpaStep ipa_step(const IpaContext& context, IpaState state, const AgentMessage& message);

struct SimulationResult {
  std::vector<AgentMessage> events;  // alert and prediction messages in order
  IpaState final_state;
  std::vector<PredictionReport> predictions;
};

/// Loads every model and stream first; any failure aborts before an agent
/// runs. Each round, the hosts with records left are visited in a seeded
/// random order and process one record each.
SimulationResult run_simulation(const SimulationConfig& config);

/// One JSON object per line: {"kind": ..., "sender": ..., "payload": {...}}.
std::string message_to_json(const AgentMessage& message);
AgentMessage message_from_json(const std::string& line);
void write_event_log(std::ostream& out, const std::vector<AgentMessage>& events);
std::vector<AgentMessage> read_event_log(std::istream& in);

}  // namespace hidpas
