#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Plain-text assets compiled into the library: ordinal scales, gazetteers,
// worker profiles and knowledge-base documents.
namespace factflow::assets {

std::optional<std::string_view> find(std::string_view id);
std::vector<std::string_view> list();

// Throws Error(not_found) for unknown ids.
std::string_view get(std::string_view id);
// Non-empty lines of a one-value-per-line asset, trailing CR stripped.
std::vector<std::string> lines(std::string_view id);

}  // namespace factflow::assets
