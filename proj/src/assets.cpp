#include "factflow/assets.hpp"

#include "factflow/error.hpp"

namespace factflow::assets {

std::string_view get(std::string_view id) {
  auto found = find(id);
  if (!found) throw Error(ErrorKind::not_found, "asset not found: " + std::string(id));
  return *found;
}

std::vector<std::string> lines(std::string_view id) {
  std::vector<std::string> out;
  std::string_view content = get(id);
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

}  // namespace factflow::assets
