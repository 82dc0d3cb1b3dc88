#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace subgp::csv {

std::string_view trim(std::string_view s);

/// Comma-separated fields, each trimmed of blanks and a trailing CR.
std::vector<std::string_view> split_fields(std::string_view line);

/// Strict parse: the whole field must be a number.
bool parse_double(std::string_view s, double& out);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace subgp::csv
