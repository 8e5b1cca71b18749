#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fedppi {

/// 17 significant digits, enough to round-trip any binary64.
std::string format_double(double value);
/// Whole-string parse; throws a validation error naming `what`.
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);
std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace fedppi
