#pragma once

// Locale-independent number formatting and parsing for reports.

#include <string>
#include <string_view>
#include <vector>

namespace qba {

/// Shortest representation that parses back to the same double.
std::string format_shortest(double x);

/// Fixed notation with exactly `decimals` digits after the point.
std::string format_fixed(double x, int decimals);

/// Fixed notation, trailing zeros (and a bare point) removed.
std::string format_trimmed(double x, int decimals);

/// Whole-field parse; throws Error(parse_error).
double parse_double(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s) noexcept;

}  // namespace qba
