#pragma once

// Discrete Bayesian network data model: variables, DAG, CPTs, evidence and the
// versioned text persistence format shared by every model file.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hidpas/error.hpp"

namespace hidpas {

using VarId = std::size_t;
using StateIndex = std::size_t;

struct Variable {
  VarId id = 0;
  std::string name;
  std::vector<std::string> states;

  std::size_t arity() const noexcept { return states.size(); }
  std::optional<StateIndex> state_index(const std::string& label) const;
};

/// Directed graph over variables. Cycles are representable so that
/// validate_network can report them; algorithms that need a DAG call
/// topological_order() and fail when it is empty.
class Dag {
 public:
  Dag() = default;
  explicit Dag(std::vector<Variable> variables);

  /// Appends `parent` to the ordered parent list of `child`.
  void add_edge(VarId parent, VarId child);

  std::size_t size() const noexcept { return variables_.size(); }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const Variable& variable(VarId id) const;
  const std::vector<VarId>& parents(VarId id) const;
  std::vector<VarId> children(VarId id) const;
  bool has_edge(VarId parent, VarId child) const;
  std::size_t edge_count() const noexcept;
  /// Edges as (parent, child), children ascending, parents in declared order.
  std::vector<std::pair<VarId, VarId>> edges() const;
  std::optional<VarId> find(const std::string& name) const;

  /// Kahn's algorithm with lowest-id tie-break; nullopt when a cycle exists.
  std::optional<std::vector<VarId>> topological_order() const;

 private:
  std::vector<Variable> variables_;
  std::vector<std::vector<VarId>> parents_;
};

struct Cpt {
  VarId variable = 0;
  std::vector<VarId> parents;
  /// One row per parent configuration (row-major, last parent fastest).
  std::vector<std::vector<double>> rows;
};

class BayesNet {
 public:
  BayesNet() = default;
  BayesNet(Dag dag, std::vector<Cpt> cpts);

  const Dag& dag() const noexcept { return dag_; }
  const std::vector<Cpt>& cpts() const noexcept { return cpts_; }
  const Cpt& cpt(VarId id) const;
  std::size_t size() const noexcept { return dag_.size(); }
  const Variable& variable(VarId id) const { return dag_.variable(id); }

 private:
  Dag dag_;
  std::vector<Cpt> cpts_;
};

/// Hard evidence: variable id -> observed state index.
using Evidence = std::map<VarId, StateIndex>;

/// Throws invalid_argument for unknown variables or out-of-range states.
void check_evidence(const Dag& dag, const Evidence& evidence);

struct Violation {
  enum class Kind { cycle, bad_parent, shape, row_sum, range, variable };
  Kind kind;
  VarId variable;
  std::string description;
};

std::vector<Violation> validate_network(const BayesNet& net);

using Configuration = std::vector<StateIndex>;

/// Row-major enumeration of parent states, last parent varying fastest.
std::vector<Configuration> parent_configurations(const BayesNet& net, VarId var);
std::vector<Configuration> enumerate_configurations(std::span<const std::size_t> arities);

/// Row-major linear index of `config` under `arities`.
std::size_t configuration_index(std::span<const std::size_t> arities,
                                std::span<const StateIndex> config);
std::size_t configuration_count(std::span<const std::size_t> arities);

double joint_probability(const BayesNet& net, std::span<const StateIndex> assignment);

// Persistence. The text format starts with the `HIDPAS-BN v1` magic and holds
// VARIABLES, EDGES and one CPT section per variable. Pipelines that need more
// than the network (discretisation rules, thresholds) add META and RULES
// sections, which plain readers carry through untouched.

inline constexpr const char* kFormatMagic = "HIDPAS-BN v1";

struct ModelFile {
  BayesNet net;
  std::map<std::string, std::string> meta;
  std::vector<std::string> rules;

  /// Throws parse when the key is absent.
  const std::string& require(const std::string& key) const;
};

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);

std::string to_text(const BayesNet& net);
BayesNet network_from_text(const std::string& text);

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

/// Formats with %.12g.
std::string format_probability(double value);

}  // namespace hidpas
