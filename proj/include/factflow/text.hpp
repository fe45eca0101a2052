#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factflow::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool contains_icase(std::string_view haystack, std::string_view needle);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::size_t word_count(std::string_view s);

// Strict parses: the whole string must be consumed.
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<double> parse_real(std::string_view s);  // finite values only

// Shortest round-trip decimal for a double ("2.5", "17", "1e+20").
std::string format_real(double v);
// Compact display form for prompts and statements: at most four decimals.
std::string format_display(double v);
// Fixed-point with trailing zeros trimmed; used for SVG/PDF coordinates.
std::string format_coord(double v);

std::string sha256_hex(std::string_view data);

}  // namespace factflow::text
