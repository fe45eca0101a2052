#include "factflow/layout.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "factflow/error.hpp"

namespace factflow::layout {

SectionBlock make_block(std::string ref, std::int64_t fact_count) {
  SectionBlock b;
  b.section_ref = std::move(ref);
  b.fact_count = fact_count;
  b.score = calculate_score(b);
  return b;
}

std::int64_t calculate_score(const SectionBlock& block) {
  if (block.fact_count < 0) {
    throw Error(ErrorKind::validation, fmt::format("section {} has a negative fact count", block.section_ref));
  }
  return kHeaderHeight + block.fact_count * kFactHeight;
}

std::int64_t column_difference(const std::vector<SectionBlock>& ordered, const std::vector<bool>& flags) {
  std::int64_t left = 0, right = 0;
  for (std::size_t i = 0; i < ordered.size(); ++i) (flags[i] ? left : right) += ordered[i].score;
  return std::llabs(left - right);
}

namespace {

// Advances `comb` (sorted values drawn from 1..m) to the next subset of the
// same size in lexicographic order. False once exhausted.
bool next_combination(std::vector<std::size_t>& comb, std::size_t m) {
  const std::size_t k = comb.size();
  for (std::size_t i = k; i-- > 0;) {
    if (comb[i] < m - k + i + 1) {
      ++comb[i];
      for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

LayoutPlan greedy(const std::vector<SectionBlock>& sections) {
  LayoutPlan plan;
  plan.ordered_sections = sections;
  std::int64_t left = 0, right = 0;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const bool to_left = i == 0 || left <= right;
    (to_left ? left : right) += sections[i].score;
    plan.column_flags.push_back(to_left);
  }
  plan.best_diff = std::llabs(left - right);
  return plan;
}

}  // namespace

LayoutPlan split_columns(const std::vector<SectionBlock>& sections, SplitMode mode) {
  if (sections.empty()) throw Error(ErrorKind::validation, "cannot lay out an empty section list");
  const std::vector<SectionBlock>& blocks = sections;
  const std::size_t n = blocks.size();
  if (n > kExhaustiveLimit) return greedy(blocks);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  std::int64_t best_diff = std::numeric_limits<std::int64_t>::max();
  std::vector<std::size_t> best_perm;
  std::vector<std::size_t> best_comb;

  do {
    const std::int64_t lead = blocks[perm[0]].score;
    std::int64_t rest = 0;
    for (std::size_t i = 1; i < n; ++i) rest += blocks[perm[i]].score;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<std::size_t> comb(k);
      std::iota(comb.begin(), comb.end(), 1);
      do {
        std::int64_t left = lead;
        for (auto i : comb) left += blocks[perm[i]].score;
        const std::int64_t right = rest - (left - lead);
        const std::int64_t diff = std::llabs(left - right);
        if (diff < best_diff) {
          best_diff = diff;
          best_perm = perm;
          best_comb = comb;
        }
      } while (next_combination(comb, n - 1));
    }
    // Nothing beats zero and later ties never replace the first one.
    if (best_diff == 0 || mode == SplitMode::order_preserving) break;
  } while (std::next_permutation(perm.begin() + 1, perm.end()));

  LayoutPlan plan;
  plan.best_diff = best_diff;
  plan.column_flags.assign(n, false);
  plan.column_flags[0] = true;
  for (auto i : best_comb) plan.column_flags[i] = true;
  for (auto i : best_perm) plan.ordered_sections.push_back(blocks[i]);
  return plan;
}

std::vector<SectionBlock> blocks_for(const SheetStructure& structure) {
  std::vector<SectionBlock> out;
  for (const auto& s : structure.sections) out.push_back(make_block(s.id, static_cast<std::int64_t>(s.fact_ids.size())));
  return out;
}

PageGeometry compose_page(const LayoutPlan& plan, const SheetStructure& structure) {
  if (plan.ordered_sections.size() != structure.sections.size() ||
      plan.column_flags.size() != plan.ordered_sections.size()) {
    throw Error(ErrorKind::validation, "layout plan does not match the sheet structure");
  }
  PageGeometry page;
  std::int64_t left_y = 0, right_y = 0;
  for (std::size_t i = 0; i < plan.ordered_sections.size(); ++i) {
    const auto& block = plan.ordered_sections[i];
    const Section* sec = structure.find_section(block.section_ref);
    if (!sec || static_cast<std::int64_t>(sec->fact_ids.size()) != block.fact_count) {
      throw Error(ErrorKind::validation,
                  fmt::format("layout plan does not match the sheet structure at section {}", block.section_ref));
    }
    const bool left = plan.column_flags[i];
    std::int64_t& y = left ? left_y : right_y;
    const std::int64_t x = left ? 0 : kColumnWidth;
    page.sections.push_back({sec->id, left, {x, y, kColumnWidth, calculate_score(block)}});
    std::int64_t fy = y + kHeaderHeight;
    for (const auto& fid : sec->fact_ids) {
      page.facts.push_back({fid, sec->id, {x, fy, kColumnWidth, kFactHeight}});
      fy += kFactHeight;
    }
    y += calculate_score(block);
  }
  page.height = std::max(left_y, right_y);
  return page;
}

nlohmann::json to_json(const LayoutPlan& plan) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& b : plan.ordered_sections) {
    sections.push_back({{"section_ref", b.section_ref}, {"fact_count", b.fact_count}, {"score", b.score}});
  }
  nlohmann::json flags = nlohmann::json::array();
  for (bool f : plan.column_flags) flags.push_back(f);
  return {{"ordered_sections", sections}, {"column_flags", flags}, {"best_diff", plan.best_diff}};
}

LayoutPlan plan_from_json(const nlohmann::json& j) {
  LayoutPlan plan;
  try {
    for (const auto& b : j.at("ordered_sections")) {
      plan.ordered_sections.push_back(
          make_block(b.at("section_ref").get<std::string>(), b.at("fact_count").get<std::int64_t>()));
    }
    for (const auto& f : j.at("column_flags")) plan.column_flags.push_back(f.get<bool>());
    plan.best_diff = j.at("best_diff").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("layout plan: {}", e.what()));
  }
  return plan;
}

nlohmann::json to_json(const PageGeometry& page) {
  auto rect = [](const Rect& r) { return nlohmann::json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; };
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : page.sections) {
    sections.push_back({{"section_id", s.section_id}, {"left", s.left}, {"rect", rect(s.rect)}});
  }
  nlohmann::json facts = nlohmann::json::array();
  for (const auto& f : page.facts) {
    facts.push_back({{"fact_id", f.fact_id}, {"section_id", f.section_id}, {"rect", rect(f.rect)}});
  }
  return {{"width", page.width}, {"height", page.height}, {"sections", sections}, {"facts", facts}};
}

}  // namespace factflow::layout
