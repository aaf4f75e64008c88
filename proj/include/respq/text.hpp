#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace respq {

/// Shortest decimal that round-trips, capped at 17 significant digits.
std::string format_double(double v);
/// Locale-independent parse; throws ParseError on junk or trailing characters.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s) noexcept;

}  // namespace respq
