#include <algorithm>
#include <cstdint>
#include <numeric>

#include "doctest.h"
#include "factflow/error.hpp"
#include "factflow/layout.hpp"
#include "factflow/rng.hpp"

using namespace factflow;
using namespace factflow::layout;

namespace {

std::vector<SectionBlock> from_scores(const std::vector<std::int64_t>& scores) {
  std::vector<SectionBlock> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    SectionBlock b;
    b.section_ref = "s" + std::to_string(i);
    b.score = scores[i];
    out.push_back(b);
  }
  return out;
}

// Minimum imbalance over every left/right assignment with the first block
// fixed left. Order is irrelevant to the sums, so this ignores permutations.
std::int64_t brute_force_min(const std::vector<std::int64_t>& scores) {
  const std::size_t n = scores.size();
  std::int64_t best = INT64_MAX;
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::int64_t left = scores[0], right = 0;
    for (std::size_t i = 1; i < n; ++i) ((mask >> (i - 1)) & 1u ? left : right) += scores[i];
    best = std::min<std::int64_t>(best, std::llabs(left - right));
  }
  return best;
}

// Literal transcription of the enumeration: permutations of positions 1..n-1
// in lexicographic order; subsets of 1..n-1 sorted by size, then as sorted
// sequences; strict improvement only.
LayoutPlan reference_plan(const std::vector<std::int64_t>& scores) {
  const std::size_t n = scores.size();
  std::vector<std::vector<std::size_t>> subsets;
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 1; i < n; ++i) {
      if ((mask >> (i - 1)) & 1u) s.push_back(i);
    }
    subsets.push_back(s);
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::int64_t best = INT64_MAX;
  std::vector<std::size_t> best_perm, best_comb;
  do {
    for (const auto& comb : subsets) {
      std::int64_t left = scores[perm[0]], right = 0;
      for (std::size_t i = 1; i < n; ++i) {
        (std::find(comb.begin(), comb.end(), i) != comb.end() ? left : right) += scores[perm[i]];
      }
      if (std::llabs(left - right) < best) {
        best = std::llabs(left - right);
        best_perm = perm;
        best_comb = comb;
      }
    }
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  const auto blocks = from_scores(scores);
  LayoutPlan plan;
  plan.best_diff = best;
  for (auto i : best_perm) plan.ordered_sections.push_back(blocks[i]);
  plan.column_flags.assign(n, false);
  plan.column_flags[0] = true;
  for (auto i : best_comb) plan.column_flags[i] = true;
  return plan;
}

SheetStructure structure_with(const std::vector<std::size_t>& fact_counts) {
  SheetStructure s;
  s.title = "t";
  int next = 1;
  for (std::size_t i = 0; i < fact_counts.size(); ++i) {
    Section sec;
    sec.id = i == 0 ? std::string(kIntroductionId) : "s" + std::to_string(i);
    sec.topic = i == 0 ? std::string(kIntroductionTopic) : "topic " + std::to_string(i);
    for (std::size_t f = 0; f < fact_counts[i]; ++f) sec.fact_ids.push_back("f" + std::to_string(next++));
    s.sections.push_back(sec);
  }
  return s;
}

bool overlaps(const Rect& a, const Rect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

bool inside(const Rect& inner, const Rect& outer) {
  return inner.x >= outer.x && inner.y >= outer.y && inner.x + inner.w <= outer.x + outer.w &&
         inner.y + inner.h <= outer.y + outer.h;
}

}  // namespace

TEST_SUITE_BEGIN("layout");

TEST_CASE("section score") {
  CHECK(calculate_score(make_block("a", 0)) == 40);
  CHECK(calculate_score(make_block("a", 2)) == 400);
  CHECK(calculate_score(make_block("a", 5)) == 940);
  CHECK_THROWS_AS(make_block("a", -1), Error);
}

TEST_CASE("hand-checked plans") {
  // Expected plans come from a Python transcription using itertools.
  auto single = split_columns(from_scores({40}));
  CHECK(single.column_flags == std::vector<bool>{true});
  CHECK(single.best_diff == 40);

  auto pair = split_columns(from_scores({400, 400}));
  CHECK(pair.column_flags == std::vector<bool>{true, false});
  CHECK(pair.best_diff == 0);

  // One five-fact section next to five one-fact sections: the best split
  // leaves 940 against 1100.
  auto big = split_columns(from_scores({940, 220, 220, 220, 220, 220}));
  CHECK(big.best_diff == 160);
  CHECK(big.column_flags == std::vector<bool>{true, false, false, false, false, false});

  auto mixed = split_columns(from_scores({40, 400, 220, 580}));
  CHECK(mixed.best_diff == 0);
  CHECK(mixed.column_flags == std::vector<bool>{true, false, false, true});

  auto five = split_columns(from_scores({40, 760, 220, 220, 400}));
  CHECK(five.best_diff == 40);
  CHECK(five.column_flags == std::vector<bool>{true, true, false, false, false});

  CHECK_THROWS_AS(split_columns({}), Error);
}

TEST_CASE("optimal against brute force on random score lists") {
  Rng rng(11, "layout");
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<std::int64_t> scores;
    for (std::size_t i = 0; i < n; ++i) scores.push_back(rng.uniform_int(40, 1000));
    auto plan = split_columns(from_scores(scores));
    REQUIRE(plan.column_flags.size() == n);
    CHECK(plan.column_flags[0]);
    CHECK(plan.ordered_sections[0].section_ref == "s0");
    CHECK(plan.best_diff == brute_force_min(scores));
    CHECK(plan.best_diff == column_difference(plan.ordered_sections, plan.column_flags));
  }
}

TEST_CASE("tie-break matches the literal enumeration order") {
  Rng rng(12, "layout-ties");
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    std::vector<std::int64_t> scores;
    // Few distinct values so that many candidates tie.
    for (std::size_t i = 0; i < n; ++i) scores.push_back(40 + 180 * static_cast<std::int64_t>(rng.below(3)));
    CHECK(split_columns(from_scores(scores)) == reference_plan(scores));
  }
}

TEST_CASE("repeated runs are identical") {
  const auto blocks = from_scores({220, 400, 40, 580, 220, 760, 400, 220});
  const std::string first = to_json(split_columns(blocks)).dump();
  for (int i = 0; i < 100; ++i) CHECK(to_json(split_columns(blocks)).dump() == first);
}

TEST_CASE("order-preserving mode keeps the given order") {
  Rng rng(13, "layout-order");
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<std::int64_t> scores;
    for (std::size_t i = 0; i < n; ++i) scores.push_back(rng.uniform_int(40, 1000));
    auto plan = split_columns(from_scores(scores), SplitMode::order_preserving);
    CHECK(plan.best_diff == brute_force_min(scores));
    for (std::size_t i = 0; i < n; ++i) CHECK(plan.ordered_sections[i].section_ref == "s" + std::to_string(i));
  }
}

TEST_CASE("greedy pass above the exhaustive limit") {
  std::vector<std::int64_t> scores = {40, 400, 400, 220, 220, 580, 40, 220, 400, 760};
  auto plan = split_columns(from_scores(scores));
  REQUIRE(plan.column_flags.size() == scores.size());
  CHECK(plan.column_flags[0]);
  for (std::size_t i = 0; i < scores.size(); ++i) CHECK(plan.ordered_sections[i].score == scores[i]);
  CHECK(plan.best_diff == column_difference(plan.ordered_sections, plan.column_flags));
  // left 40 | right 400 | left 440 | right 620 | left 660 | right 1200 |
  // left 700 | left 920 | left 1320 | right 1960
  CHECK(plan.column_flags ==
        std::vector<bool>{true, false, true, false, true, false, true, true, true, false});
  CHECK(plan.best_diff == 640);
}

TEST_CASE("eight sections stay exhaustive and fast") {
  auto plan = split_columns(from_scores({40, 1000, 940, 760, 580, 400, 220, 130}));
  CHECK(plan.best_diff == brute_force_min({40, 1000, 940, 760, 580, 400, 220, 130}));
}

TEST_CASE("page geometry") {
  SUBCASE("one section with two facts") {
    auto s = structure_with({2});
    auto page = compose_page(split_columns(blocks_for(s)), s);
    REQUIRE(page.sections.size() == 1);
    CHECK(page.sections[0].rect == Rect{0, 0, 400, 400});
    REQUIRE(page.facts.size() == 2);
    CHECK(page.facts[0].rect.y == 40);
    CHECK(page.facts[1].rect.y == 220);
    CHECK(page.height == 400);
  }
  SUBCASE("two equal sections split across columns") {
    auto s = structure_with({1, 1});
    auto page = compose_page(split_columns(blocks_for(s)), s);
    CHECK(page.sections[0].rect == Rect{0, 0, 400, 220});
    CHECK(page.sections[1].rect == Rect{400, 0, 400, 220});
  }
  SUBCASE("everything in the left column") {
    auto s = structure_with({0, 1});
    LayoutPlan plan;
    plan.ordered_sections = blocks_for(s);
    plan.column_flags = {true, true};
    auto page = compose_page(plan, s);
    CHECK(page.width == kPageWidth);
    CHECK(page.sections[1].rect == Rect{0, 40, 400, 220});
    CHECK(page.height == 260);
  }
  SUBCASE("mismatched plan") {
    auto s = structure_with({0, 2});
    auto plan = split_columns(blocks_for(structure_with({0, 1})));
    CHECK_THROWS_AS(compose_page(plan, s), Error);
  }
}

TEST_CASE("page geometry never overlaps") {
  Rng rng(14, "layout-page");
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> counts = {0};
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) counts.push_back(rng.below(5));
    auto s = structure_with(counts);
    auto page = compose_page(split_columns(blocks_for(s)), s);
    CHECK(page.sections[0].section_id == kIntroductionId);
    CHECK(page.sections[0].rect.x == 0);
    CHECK(page.sections[0].rect.y == 0);
    for (std::size_t a = 0; a < page.sections.size(); ++a) {
      for (std::size_t b = a + 1; b < page.sections.size(); ++b) {
        CHECK_FALSE(overlaps(page.sections[a].rect, page.sections[b].rect));
      }
    }
    for (std::size_t a = 0; a < page.facts.size(); ++a) {
      const auto& f = page.facts[a];
      auto sec = std::find_if(page.sections.begin(), page.sections.end(),
                              [&](const auto& p) { return p.section_id == f.section_id; });
      REQUIRE(sec != page.sections.end());
      CHECK(inside(f.rect, sec->rect));
      for (std::size_t b = a + 1; b < page.facts.size(); ++b) CHECK_FALSE(overlaps(f.rect, page.facts[b].rect));
      CHECK(f.rect.y + f.rect.h <= page.height);
    }
  }
}

TEST_CASE("plan survives JSON") {
  auto plan = split_columns(blocks_for(structure_with({0, 3, 1, 2})));
  CHECK(plan_from_json(to_json(plan)) == plan);
}

TEST_SUITE_END();
