#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factflow/model.hpp"
#include "json.hpp"

namespace factflow::layout {

inline constexpr std::int64_t kHeaderHeight = 40;   // section heading band
inline constexpr std::int64_t kFactHeight = 180;    // one fact card
inline constexpr std::int64_t kColumnWidth = 400;
inline constexpr std::int64_t kPageWidth = 2 * kColumnWidth;
// Largest section count searched exhaustively; above it the greedy pass runs.
inline constexpr std::size_t kExhaustiveLimit = 8;

struct SectionBlock {
  std::string section_ref;
  std::int64_t fact_count = 0;
  std::int64_t score = 0;
  friend bool operator==(const SectionBlock&, const SectionBlock&) = default;
};

SectionBlock make_block(std::string ref, std::int64_t fact_count);
std::int64_t calculate_score(const SectionBlock& block);

struct LayoutPlan {
  std::vector<SectionBlock> ordered_sections;
  std::vector<bool> column_flags;  // true = left column
  std::int64_t best_diff = 0;
  friend bool operator==(const LayoutPlan&, const LayoutPlan&) = default;
};

enum class SplitMode {
  // Every permutation of the non-leading sections times every subset.
  permuting,
  // Subsets only; sections keep their given order.
  order_preserving,
};

// Scores are taken as given. The first block is pinned at position 0 and
// always goes left. Ties keep the first candidate met: permutations in
// lexicographic order of the input positions, subsets by increasing size and
// then lexicographically. Lists longer than kExhaustiveLimit take the greedy
// pass: original order, each section to the currently shorter column (left
// on ties).
LayoutPlan split_columns(const std::vector<SectionBlock>& sections, SplitMode mode = SplitMode::permuting);

// |left - right| for a flag assignment over ordered blocks.
std::int64_t column_difference(const std::vector<SectionBlock>& ordered, const std::vector<bool>& flags);

std::vector<SectionBlock> blocks_for(const SheetStructure& structure);

struct Rect {
  std::int64_t x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct SectionPlacement {
  std::string section_id;
  bool left = true;
  Rect rect;
};

struct FactPlacement {
  std::string fact_id;
  std::string section_id;
  Rect rect;
};

struct PageGeometry {
  std::int64_t width = kPageWidth;
  std::int64_t height = 0;
  std::vector<SectionPlacement> sections;  // plan order
  std::vector<FactPlacement> facts;
};

// Throws Error(validation) when the plan and structure disagree on sections
// or fact counts.
PageGeometry compose_page(const LayoutPlan& plan, const SheetStructure& structure);

nlohmann::json to_json(const LayoutPlan& plan);
LayoutPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PageGeometry& page);

}  // namespace factflow::layout
