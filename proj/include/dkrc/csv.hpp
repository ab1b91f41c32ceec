#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dkrc::csv {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Parses a double; accepts `nan`/`inf`. Throws ParseError naming `line`.
double parse_double(std::string_view field, std::size_t line);
long long parse_int(std::string_view field, std::size_t line);

std::vector<std::string_view> split_fields(std::string_view row);

/// Reads all lines of a file; throws Io if it cannot be opened.
std::vector<std::string> read_lines(const std::string& path);
/// Writes `content` atomically enough for our purposes; throws Io on failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace dkrc::csv
