#pragma once

// Small string helpers shared by the file readers and writers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hidpas::text {

std::string trim(std::string_view s);

/// Splits on every occurrence of `sep`; "a,,b" gives three fields.
std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& items, char sep);

/// Whole-string parse; leading/trailing blanks allowed, nothing else.
std::optional<double> parse_double(std::string_view s);

/// parse_double restricted to [0, 1].
std::optional<double> parse_unit_interval(std::string_view s);

/// Shortest representation that reads back to the same double.
std::string format_number(double value);

/// Labels are written unquoted in model files, so they may not be empty or
/// contain whitespace or commas.
bool is_valid_label(std::string_view label);

/// Replaces whitespace and commas with '_' and maps the empty string to "_".
std::string sanitize_label(std::string_view label);

}  // namespace hidpas::text
