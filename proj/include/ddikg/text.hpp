#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ddikg::text {

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
// Strict parse: the whole token must be consumed.
bool parse_double(std::string_view s, double& out);

// Reads one line, dropping a trailing CR. Returns false at end of stream.
bool read_line(std::istream& in, std::string& line);

}  // namespace ddikg::text
