#include "hidpas/bn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "hidpas/text.hpp"

namespace hidpas {

std::optional<StateIndex> Variable::state_index(const std::string& label) const {
  auto it = std::find(states.begin(), states.end(), label);
  if (it == states.end()) return std::nullopt;
  return static_cast<StateIndex>(it - states.begin());
}

Dag::Dag(std::vector<Variable> variables)
    : variables_(std::move(variables)), parents_(variables_.size()) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    auto& v = variables_[i];
    if (v.id != i) {
      fail(ErrorKind::invalid_argument,
           "variable '" + v.name + "' has id " + std::to_string(v.id) + ", expected " +
               std::to_string(i));
    }
    if (v.states.empty()) {
      fail(ErrorKind::invalid_argument, "variable '" + v.name + "' has no states");
    }
    std::set<std::string> labels(v.states.begin(), v.states.end());
    if (labels.size() != v.states.size()) {
      fail(ErrorKind::invalid_argument, "variable '" + v.name + "' has duplicate state labels");
    }
    if (!names.insert(v.name).second) {
      fail(ErrorKind::invalid_argument, "duplicate variable name '" + v.name + "'");
    }
  }
}

void Dag::add_edge(VarId parent, VarId child) {
  if (parent >= size() || child >= size()) {
    fail(ErrorKind::invalid_argument, "edge references unknown variable");
  }
  auto& ps = parents_[child];
  if (std::find(ps.begin(), ps.end(), parent) != ps.end()) {
    fail(ErrorKind::invalid_argument, "duplicate edge " + variables_[parent].name + " -> " +
                                          variables_[child].name);
  }
  ps.push_back(parent);
}

const Variable& Dag::variable(VarId id) const {
  if (id >= size()) fail(ErrorKind::invalid_argument, "unknown variable id " + std::to_string(id));
  return variables_[id];
}

const std::vector<VarId>& Dag::parents(VarId id) const {
  if (id >= size()) fail(ErrorKind::invalid_argument, "unknown variable id " + std::to_string(id));
  return parents_[id];
}

std::vector<VarId> Dag::children(VarId id) const {
  std::vector<VarId> out;
  for (VarId c = 0; c < size(); ++c) {
    if (has_edge(id, c)) out.push_back(c);
  }
  return out;
}

bool Dag::has_edge(VarId parent, VarId child) const {
  if (child >= size()) return false;
  const auto& ps = parents_[child];
  return std::find(ps.begin(), ps.end(), parent) != ps.end();
}

std::size_t Dag::edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& ps : parents_) n += ps.size();
  return n;
}

std::vector<std::pair<VarId, VarId>> Dag::edges() const {
  std::vector<std::pair<VarId, VarId>> out;
  for (VarId c = 0; c < size(); ++c) {
    for (VarId p : parents_[c]) out.emplace_back(p, c);
  }
  return out;
}

std::optional<VarId> Dag::find(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v.id;
  }
  return std::nullopt;
}

std::optional<std::vector<VarId>> Dag::topological_order() const {
  std::vector<std::size_t> indegree(size(), 0);
  std::vector<std::vector<VarId>> kids(size());
  for (VarId c = 0; c < size(); ++c) {
    for (VarId p : parents_[c]) {
      if (p >= size()) return std::nullopt;
      ++indegree[c];
      kids[p].push_back(c);
    }
  }
  std::priority_queue<VarId, std::vector<VarId>, std::greater<>> ready;
  for (VarId v = 0; v < size(); ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<VarId> order;
  while (!ready.empty()) {
    VarId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VarId c : kids[v]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != size()) return std::nullopt;
  return order;
}

BayesNet::BayesNet(Dag dag, std::vector<Cpt> cpts) : dag_(std::move(dag)), cpts_(std::move(cpts)) {}

const Cpt& BayesNet::cpt(VarId id) const {
  if (id >= cpts_.size()) {
    fail(ErrorKind::invalid_argument, "no CPT for variable id " + std::to_string(id));
  }
  return cpts_[id];
}

void check_evidence(const Dag& dag, const Evidence& evidence) {
  for (const auto& [var, state] : evidence) {
    if (var >= dag.size()) {
      fail(ErrorKind::invalid_argument, "evidence on unknown variable id " + std::to_string(var));
    }
    if (state >= dag.variable(var).arity()) {
      fail(ErrorKind::invalid_argument, "evidence state " + std::to_string(state) +
                                            " out of range for '" + dag.variable(var).name + "'");
    }
  }
}

std::size_t configuration_count(std::span<const std::size_t> arities) {
  std::size_t n = 1;
  for (auto a : arities) n *= a;
  return n;
}

std::size_t configuration_index(std::span<const std::size_t> arities,
                                std::span<const StateIndex> config) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < arities.size(); ++i) {
    index = index * arities[i] + config[i];
  }
  return index;
}

std::vector<Configuration> enumerate_configurations(std::span<const std::size_t> arities) {
  std::vector<Configuration> out;
  const std::size_t total = configuration_count(arities);
  out.reserve(total);
  Configuration current(arities.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    out.push_back(current);
    for (std::size_t i = arities.size(); i-- > 0;) {
      if (++current[i] < arities[i]) break;
      current[i] = 0;
    }
  }
  return out;
}

std::vector<Configuration> parent_configurations(const BayesNet& net, VarId var) {
  const auto& parents = net.dag().parents(var);
  std::vector<std::size_t> arities;
  for (VarId p : parents) arities.push_back(net.variable(p).arity());
  return enumerate_configurations(arities);
}

std::vector<Violation> validate_network(const BayesNet& net) {
  std::vector<Violation> out;
  const Dag& dag = net.dag();
  using K = Violation::Kind;

  for (const auto& v : dag.variables()) {
    if (v.arity() < 1) out.push_back({K::variable, v.id, "variable has no states"});
    for (VarId p : dag.parents(v.id)) {
      if (p >= dag.size()) {
        out.push_back({K::bad_parent, v.id, "parent id " + std::to_string(p) + " does not exist"});
      } else if (p == v.id) {
        out.push_back({K::bad_parent, v.id, "variable is its own parent"});
      }
    }
  }

  if (!dag.topological_order()) {
    // Report each strongly connected cycle once, anchored at its lowest member.
    std::vector<int> colour(dag.size(), 0);
    std::vector<VarId> stack;
    std::set<std::set<VarId>> seen;
    std::vector<std::vector<VarId>> kids(dag.size());
    for (VarId c = 0; c < dag.size(); ++c) {
      for (VarId p : dag.parents(c)) {
        if (p < dag.size() && p != c) kids[p].push_back(c);
      }
    }
    auto dfs = [&](auto&& self, VarId v) -> void {
      colour[v] = 1;
      stack.push_back(v);
      for (VarId c : kids[v]) {
        if (colour[c] == 1) {
          auto it = std::find(stack.begin(), stack.end(), c);
          std::set<VarId> members(it, stack.end());
          if (seen.insert(members).second) {
            std::string path;
            for (auto m = it; m != stack.end(); ++m) path += dag.variable(*m).name + " -> ";
            path += dag.variable(c).name;
            out.push_back({K::cycle, *members.begin(), "directed cycle " + path});
          }
        } else if (colour[c] == 0) {
          self(self, c);
        }
      }
      stack.pop_back();
      colour[v] = 2;
    };
    for (VarId v = 0; v < dag.size(); ++v) {
      if (colour[v] == 0) dfs(dfs, v);
    }
  }

  if (net.cpts().size() != dag.size()) {
    out.push_back({K::shape, 0,
                   "network has " + std::to_string(net.cpts().size()) + " CPTs for " +
                       std::to_string(dag.size()) + " variables"});
  }
  for (std::size_t i = 0; i < net.cpts().size() && i < dag.size(); ++i) {
    const Cpt& cpt = net.cpts()[i];
    if (cpt.variable != i) {
      out.push_back({K::shape, i, "CPT at position " + std::to_string(i) + " describes variable " +
                                      std::to_string(cpt.variable)});
      continue;
    }
    if (cpt.parents != dag.parents(i)) {
      out.push_back({K::shape, i, "CPT parent list differs from the DAG parent set"});
      continue;
    }
    bool parents_ok = std::all_of(cpt.parents.begin(), cpt.parents.end(),
                                  [&](VarId p) { return p < dag.size(); });
    if (!parents_ok) continue;
    std::vector<std::size_t> arities;
    for (VarId p : cpt.parents) arities.push_back(dag.variable(p).arity());
    const std::size_t q = configuration_count(arities);
    if (cpt.rows.size() != q) {
      out.push_back({K::shape, i, "CPT has " + std::to_string(cpt.rows.size()) + " rows, expected " +
                                      std::to_string(q)});
      continue;
    }
    const std::size_t r = dag.variable(i).arity();
    for (std::size_t j = 0; j < q; ++j) {
      const auto& row = cpt.rows[j];
      if (row.size() != r) {
        out.push_back({K::shape, i, "row " + std::to_string(j) + " has " +
                                        std::to_string(row.size()) + " entries, expected " +
                                        std::to_string(r)});
        continue;
      }
      bool in_range = true;
      for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) in_range = false;
      }
      if (!in_range) {
        out.push_back({K::range, i, "row " + std::to_string(j) + " has an entry outside [0, 1]"});
      }
      double sum = std::accumulate(row.begin(), row.end(), 0.0);
      if (!(std::abs(sum - 1.0) <= 1e-9)) {
        out.push_back({K::row_sum, i, "row " + std::to_string(j) + " sums to " +
                                          format_probability(sum)});
      }
    }
  }
  return out;
}

double joint_probability(const BayesNet& net, std::span<const StateIndex> assignment) {
  if (assignment.size() != net.size()) {
    fail(ErrorKind::invalid_argument, "assignment covers " + std::to_string(assignment.size()) +
                                          " of " + std::to_string(net.size()) + " variables");
  }
  double product = 1.0;
  for (VarId v = 0; v < net.size(); ++v) {
    if (assignment[v] >= net.variable(v).arity()) {
      fail(ErrorKind::invalid_argument, "state out of range for '" + net.variable(v).name + "'");
    }
    const Cpt& cpt = net.cpt(v);
    std::size_t row = 0;
    for (VarId p : cpt.parents) row = row * net.variable(p).arity() + assignment[p];
    product *= cpt.rows[row][assignment[v]];
  }
  return product;
}

std::string format_probability(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorKind::parse, "model line " + std::to_string(line) + ": " + what);
}

std::size_t parse_index(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    auto value = std::stoull(text, &used);
    if (used != text.size()) parse_error(line, "bad integer '" + text + "'");
    return static_cast<std::size_t>(value);
  } catch (const std::logic_error&) {
    parse_error(line, "bad integer '" + text + "'");
  }
}

}  // namespace

const std::string& ModelFile::require(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) fail(ErrorKind::parse, "model META lacks '" + key + "'");
  return it->second;
}

void write_model(std::ostream& out, const ModelFile& model) {
  const BayesNet& net = model.net;
  for (const auto& v : net.dag().variables()) {
    if (!text::is_valid_label(v.name)) {
      fail(ErrorKind::invalid_argument, "variable name '" + v.name + "' cannot be written");
    }
    for (const auto& s : v.states) {
      if (!text::is_valid_label(s)) {
        fail(ErrorKind::invalid_argument, "state '" + s + "' of '" + v.name + "' cannot be written");
      }
    }
  }
  for (const auto& [k, v] : model.meta) {
    if (k.empty() || k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos) {
      fail(ErrorKind::invalid_argument, "META entry '" + k + "' cannot be written");
    }
  }
  out << kFormatMagic << "\n";
  if (!model.meta.empty()) {
    out << "META\n";
    for (const auto& [k, v] : model.meta) out << k << "=" << v << "\n";
  }
  if (!model.rules.empty()) {
    out << "RULES\n";
    for (const auto& r : model.rules) out << r << "\n";
  }
  out << "VARIABLES\n";
  for (const auto& v : net.dag().variables()) {
    out << v.id << " " << v.name << " ";
    for (std::size_t k = 0; k < v.states.size(); ++k) out << (k ? "," : "") << v.states[k];
    out << "\n";
  }
  out << "EDGES\n";
  for (auto [p, c] : net.dag().edges()) out << p << " -> " << c << "\n";
  for (const auto& cpt : net.cpts()) {
    out << "CPT " << cpt.variable << "\n";
    std::vector<std::size_t> arities;
    for (VarId p : cpt.parents) arities.push_back(net.variable(p).arity());
    auto configs = enumerate_configurations(arities);
    for (std::size_t j = 0; j < cpt.rows.size(); ++j) {
      out << "(";
      if (j < configs.size()) {
        for (std::size_t i = 0; i < configs[j].size(); ++i) out << (i ? "," : "") << configs[j][i];
      }
      out << ") :";
      for (double p : cpt.rows[j]) out << " " << format_probability(p);
      out << "\n";
    }
  }
}

ModelFile read_model(std::istream& in) {
  enum class Section { none, meta, rules, variables, edges, cpt };
  std::string raw;
  std::size_t lineno = 0;
  bool saw_magic = false;
  Section section = Section::none;
  ModelFile model;
  std::vector<Variable> variables;
  std::vector<std::pair<VarId, VarId>> edges;
  std::map<VarId, std::vector<std::vector<double>>> rows;
  std::map<VarId, std::vector<Configuration>> row_configs;
  VarId current_cpt = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (!saw_magic) {
      if (line != kFormatMagic) parse_error(lineno, "expected '" + std::string(kFormatMagic) + "'");
      saw_magic = true;
      continue;
    }
    if (line == "META") { section = Section::meta; continue; }
    if (line == "RULES") { section = Section::rules; continue; }
    if (line == "VARIABLES") { section = Section::variables; continue; }
    if (line == "EDGES") { section = Section::edges; continue; }
    if (line.rfind("CPT ", 0) == 0) {
      section = Section::cpt;
      current_cpt = parse_index(trim(line.substr(4)), lineno);
      if (rows.count(current_cpt)) parse_error(lineno, "duplicate CPT section");
      rows[current_cpt];
      continue;
    }
    switch (section) {
      case Section::none:
        parse_error(lineno, "content outside any section");
      case Section::meta: {
        auto eq = line.find('=');
        if (eq == std::string::npos) parse_error(lineno, "META entry needs key=value");
        model.meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        break;
      }
      case Section::rules:
        model.rules.push_back(line);
        break;
      case Section::variables: {
        std::istringstream fields(line);
        std::string id, name, states, extra;
        if (!(fields >> id >> name >> states) || (fields >> extra)) {
          parse_error(lineno, "variable line needs '<id> <name> <states>'");
        }
        Variable v;
        v.id = parse_index(id, lineno);
        v.name = name;
        v.states = split(states, ',');
        if (v.id != variables.size()) parse_error(lineno, "variable ids must be consecutive from 0");
        variables.push_back(std::move(v));
        break;
      }
      case Section::edges: {
        auto arrow = line.find("->");
        if (arrow == std::string::npos) parse_error(lineno, "edge line needs '<parent> -> <child>'");
        edges.emplace_back(parse_index(trim(line.substr(0, arrow)), lineno),
                           parse_index(trim(line.substr(arrow + 2)), lineno));
        break;
      }
      case Section::cpt: {
        auto close = line.find(')');
        auto colon = line.find(':', close == std::string::npos ? 0 : close);
        if (line[0] != '(' || close == std::string::npos || colon == std::string::npos) {
          parse_error(lineno, "CPT line needs '(<cfg>) : <p0 p1 ...>'");
        }
        Configuration cfg;
        std::string inner = trim(line.substr(1, close - 1));
        if (!inner.empty()) {
          for (const auto& part : split(inner, ',')) cfg.push_back(parse_index(trim(part), lineno));
        }
        std::istringstream probs(line.substr(colon + 1));
        std::vector<double> row;
        std::string tok;
        while (probs >> tok) {
          try {
            std::size_t used = 0;
            row.push_back(std::stod(tok, &used));
            if (used != tok.size()) parse_error(lineno, "bad probability '" + tok + "'");
          } catch (const std::logic_error&) {
            parse_error(lineno, "bad probability '" + tok + "'");
          }
        }
        rows[current_cpt].push_back(std::move(row));
        row_configs[current_cpt].push_back(std::move(cfg));
        break;
      }
    }
  }
  if (!saw_magic) fail(ErrorKind::parse, "empty model file");

  Dag dag(std::move(variables));
  for (auto [p, c] : edges) {
    if (p >= dag.size() || c >= dag.size()) {
      fail(ErrorKind::parse, "edge " + std::to_string(p) + " -> " + std::to_string(c) +
                                 " references an unknown variable");
    }
    dag.add_edge(p, c);
  }
  std::vector<Cpt> cpts;
  for (VarId v = 0; v < dag.size(); ++v) {
    auto it = rows.find(v);
    if (it == rows.end()) fail(ErrorKind::parse, "missing CPT for variable " + std::to_string(v));
    Cpt cpt;
    cpt.variable = v;
    cpt.parents = dag.parents(v);
    std::vector<std::size_t> arities;
    for (VarId p : cpt.parents) arities.push_back(dag.variable(p).arity());
    const auto& cfgs = row_configs[v];
    cpt.rows.assign(configuration_count(arities), {});
    std::vector<bool> filled(cpt.rows.size(), false);
    for (std::size_t j = 0; j < it->second.size(); ++j) {
      const auto& cfg = cfgs[j];
      bool ok = cfg.size() == arities.size();
      for (std::size_t i = 0; ok && i < cfg.size(); ++i) ok = cfg[i] < arities[i];
      if (!ok) fail(ErrorKind::parse, "CPT " + std::to_string(v) + " has a malformed configuration");
      auto idx = configuration_index(arities, cfg);
      if (filled[idx]) fail(ErrorKind::parse, "CPT " + std::to_string(v) + " repeats a configuration");
      filled[idx] = true;
      cpt.rows[idx] = it->second[j];
    }
    if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
      fail(ErrorKind::parse, "CPT " + std::to_string(v) + " is missing parent configurations");
    }
    cpts.push_back(std::move(cpt));
  }
  if (rows.size() != dag.size()) fail(ErrorKind::parse, "CPT section for an unknown variable");
  model.net = BayesNet(std::move(dag), std::move(cpts));
  return model;
}

std::string to_text(const BayesNet& net) {
  std::ostringstream out;
  write_model(out, ModelFile{net, {}, {}});
  return out.str();
}

BayesNet network_from_text(const std::string& text) {
  std::istringstream in(text);
  return read_model(in).net;
}

void save_model(const std::string& path, const ModelFile& model) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  write_model(out, model);
  if (!out) fail(ErrorKind::io, "error writing '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open model '" + path + "'");
  return read_model(in);
}

}  // namespace hidpas
