#pragma once

// Tabular ingestion of connection records, Gini-gain feature ranking and
// mean-threshold binary discretization.

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hidpas/learning.hpp"

namespace hidpas {

/// Reserved state for categorical values never seen during training.
inline constexpr const char* kUnknownState = "__unknown__";
inline constexpr const char* kBelowMean = "v1";
inline constexpr const char* kAtOrAboveMean = "v2";

struct Column {
  std::string name;
  bool numeric = false;
  std::vector<double> numbers;       // used when numeric
  std::vector<std::string> strings;  // used otherwise

  std::size_t size() const noexcept { return numeric ? numbers.size() : strings.size(); }
};

/// Rectangular table of named columns.
class RawTable {
 public:
  void add_column(Column column);
  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::vector<Column>& mutable_columns() noexcept { return columns_; }
  std::size_t rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  /// Throws invalid_argument for an unknown name.
  const Column& column(const std::string& name) const;

 private:
  std::vector<Column> columns_;
};

/// The 41 connection features followed by the label column.
const std::vector<std::string>& kdd_column_names();
bool kdd_is_categorical(const std::string& column);
inline constexpr std::size_t kKddFeatureCount = 41;
inline constexpr const char* kKddLabelColumn = "attack_type";

enum class MalformedRows { abort, skip };

struct LoadReport {
  std::size_t rows = 0;
  std::size_t skipped = 0;
  std::vector<std::string> problems;  // one per skipped row, "line N: ..."
};

/// Headerless comma-separated records of 41 features and a label. A trailing
/// '.' on the label is dropped.
RawTable load_kdd(std::istream& in, MalformedRows policy = MalformedRows::abort,
                  LoadReport* report = nullptr);
RawTable load_kdd_file(const std::string& path, MalformedRows policy = MalformedRows::abort,
                       LoadReport* report = nullptr);

enum class LabelGranularity { attack, category };

/// normal / dos / probe / r2l / u2r for the known attack names; unknown
/// names are returned unchanged.
std::string attack_category(const std::string& attack);
void apply_label_granularity(RawTable& table, const std::string& column, LabelGranularity g);

double gini_impurity(std::span<const std::size_t> class_counts);

struct FeatureScore {
  std::string column;
  double gain = 0.0;
};
using FeatureRanking = std::vector<FeatureScore>;

/// Gini gain of every non-class column, descending, ties in table order.
/// Numeric columns are scored after a split at their mean.
FeatureRanking gini_rank(const RawTable& table, const std::string& class_column);

struct DiscretizationRule {
  std::string column;
  double threshold = 0.0;

  const char* bin(double value) const { return value < threshold ? kBelowMean : kAtOrAboveMean; }
};

struct Discretized {
  DiscretizationRule rule;
  std::vector<std::string> bins;
  bool degenerate = false;  // every value equal
};

/// Threshold at the arithmetic mean; below goes to v1, the rest to v2.
Discretized mean_discretize(const std::string& column, std::span<const double> values);

/// Top-k feature names by rank followed by the class column.
std::vector<std::string> select_features(const FeatureRanking& ranking, std::size_t k,
                                         const std::string& class_column);

struct CategoricalRule {
  std::string column;
  std::vector<std::string> states;  // sorted, without the unknown state
};

/// Everything needed to turn raw values of the selected columns into states.
struct FeatureRules {
  std::vector<DiscretizationRule> numeric;
  std::vector<CategoricalRule> categorical;

  const DiscretizationRule* numeric_rule(const std::string& column) const;
  const CategoricalRule* categorical_rule(const std::string& column) const;

  /// "<column> mean=<value>" and "<column> states=a,b".
  std::vector<std::string> to_lines() const;
  static FeatureRules from_lines(std::span<const std::string> lines);
};

/// Means for numeric columns, sorted distinct values for categorical ones.
FeatureRules fit_rules(const RawTable& table, std::span<const std::string> columns);

/// State labels of one selected column under the rules.
Variable rule_variable(const FeatureRules& rules, const std::string& column, VarId id,
                       bool with_unknown);

/// Maps one raw value to a state of `var`. Unseen categories go to the
/// unknown state when the variable has one; otherwise nullopt. Unparseable
/// numbers give nullopt.
std::optional<StateIndex> encode_value(const FeatureRules& rules, const Variable& var,
                                       const std::string& raw);

/// Columns in `selected` order. With `with_unknown`, every categorical
/// column except `class_column` gains the unknown state. Throws data when a
/// value cannot be encoded.
DiscreteDataset to_discrete_dataset(const RawTable& table, const FeatureRules& rules,
                                    std::span<const std::string> selected, bool with_unknown,
                                    const std::string& class_column = {});

/// The same structure over variables rebuilt from the rules, with the
/// unknown state added to every column but `class_column`.
Dag extend_with_unknown(const Dag& learned, const FeatureRules& rules,
                        std::span<const std::string> columns, const std::string& class_column);

}  // namespace hidpas
