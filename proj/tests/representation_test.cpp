#include <fstream>

#include "doctest.h"
#include "factflow/representation.hpp"
#include "factflow/text.hpp"

using namespace factflow;
using namespace factflow::repr;
using ingest::DataClass;

namespace {

ingest::Dataset load_sample(const std::string& file, const std::string& name) {
  std::ifstream in(std::string(FACTFLOW_SOURCE_DIR) + "/data/" + file, std::ios::binary);
  std::string csv((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ingest::classify_columns(ingest::load_csv(csv, name));
}

}  // namespace

TEST_SUITE_BEGIN("representation");

TEST_CASE("DDL for the car sales table") {
  auto ds = load_sample("carsales.csv", "CarSales");
  CHECK(emit_ddl(ds) ==
        "CREATE TABLE \"CarSales\" (\"Brand\" TEXT, \"Type\" TEXT, \"Sale\" INTEGER, \"Year\" INTEGER);");
}

TEST_CASE("DDL type mapping and identifier escaping") {
  auto ds = ingest::classify_columns(ingest::load_csv("x\n1.5\n2.25\n", "t"));
  CHECK(emit_ddl(ds) == "CREATE TABLE \"t\" (\"x\" REAL);");
  auto quoted = ingest::classify_columns(ingest::load_csv("\"say \"\"hi\"\"\"\nA\n", "q\"t"));
  CHECK(emit_ddl(quoted) == "CREATE TABLE \"q\"\"t\" (\"say \"\"hi\"\"\" TEXT);");
}

TEST_CASE("token estimate is chars over four, rounded up") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("123456789") == 3);
  CHECK(estimate_tokens(std::string(4096, 'x')) == 1024);
}

TEST_CASE("stats lines") {
  auto ds = ingest::classify_columns(ingest::load_csv("n,s\n1,a\n2,a\n3,b\n4,\n", "t"));
  auto map = anon::build_map(ds, 1);
  const auto lines = text::split(emit_stats(ds, map), '\n');
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "n (discrete): min=1, max=4, mean=2.5, median=2.5, p25=1.75, p75=3.25, nulls=0");
  const auto& m = map.find("s")->forward;
  CHECK(lines[1] == "s (nominal): unique=2, top=[" + m.at("a") + " (2); " + m.at("b") + " (1)], nulls=1");
}

TEST_CASE("budget boundaries") {
  auto ds = ingest::classify_columns(ingest::load_csv("g,v\nA,5.0\nB,5.0\nC,5.0\nD,5.0\nF,5.0\n", "tiny"));
  auto map = anon::build_map(ds, 3);
  const std::size_t minimum = minimum_budget(ds, map);

  auto at_min = build_representation(ds, map, minimum, 1);
  CHECK(at_min.example_rows.empty());
  CHECK(at_min.text() == at_min.ddl + "\n\n" + at_min.stats_block);
  CHECK(at_min.token_estimate <= minimum);
  CHECK_THROWS_AS(build_representation(ds, map, minimum - 1, 1), Error);
  try {
    build_representation(ds, map, minimum - 1, 1);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(std::to_string(minimum)) != std::string::npos);
  }

  CHECK(build_representation(ds, map, 100000, 1).example_rows.size() == 5);

  // Every anonymized row is "X,5.0" (identity grades, degenerate range):
  // six characters with its newline. Leave room for two and a half rows.
  const std::size_t fixed = at_min.ddl.size() + 2 + at_min.stats_block.size() + 2 + std::string("g,v").size();
  const std::size_t budget = (fixed + 15) / 4;
  REQUIRE(budget * 4 >= fixed + 12);
  REQUIRE(budget * 4 < fixed + 18);
  auto two = build_representation(ds, map, budget, 1);
  CHECK(two.example_rows.size() == 2);
  CHECK(two.token_estimate <= budget);
}

TEST_CASE("monotone, deterministic and leak-free on the sample tables") {
  for (auto [file, name] : {std::pair{"carsales.csv", "CarSales"}, {"movies.csv", "Movies"}}) {
    auto ds = load_sample(file, name);
    auto map = anon::build_map(ds, 7);
    const std::size_t minimum = minimum_budget(ds, map);
    std::size_t prev = 0;
    for (std::size_t budget = minimum; budget < minimum + 3000; budget += 97) {
      auto rep = build_representation(ds, map, budget, 7);
      CHECK(rep.token_estimate <= budget);
      CHECK(rep.example_rows.size() >= prev);
      prev = rep.example_rows.size();
      CHECK(rep.text() == build_representation(ds, map, budget, 7).text());
    }
    auto rep = build_representation(ds, map, kDefaultBudget, 7);
    CHECK(!rep.example_rows.empty());
    // No raw value of any sampled row survives: rows are matched back by
    // searching the original table for an exact copy.
    for (const auto& row : rep.example_rows) {
      for (std::size_t r = 0; r < ds.row_count; ++r) {
        std::size_t same = 0, nonnull = 0;
        for (std::size_t c = 0; c < ds.columns.size(); ++c) {
          if (!ds.columns[c].cells[r]) continue;
          ++nonnull;
          same += ds.columns[c].cells[r] == row[c];
        }
        CHECK(same < nonnull);
      }
    }
    // The text carries no original nominal value.
    const auto text = rep.text();
    for (const auto& col : ds.columns) {
      if (col.data_class != DataClass::nominal) continue;
      for (const auto& v : ingest::distinct_values(col)) {
        if (v.size() < 4) continue;
        CHECK_MESSAGE(text.find("," + v + ",") == std::string::npos, v);
      }
    }
  }
}

TEST_SUITE_END();
