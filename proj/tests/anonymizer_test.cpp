#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "doctest.h"
#include "factflow/anonymizer.hpp"
#include "factflow/sql_lexer.hpp"
#include "factflow/text.hpp"

using namespace factflow;
using namespace factflow::anon;
using ingest::Cell;
using ingest::Column;
using ingest::DataClass;
using ingest::Dataset;

namespace {

Dataset classified(std::string_view csv) {
  return ingest::classify_columns(ingest::load_csv(csv, "t"));
}

ColumnMapping hand_discrete() {
  ColumnMapping m{.column = "Year", .data_class = DataClass::discrete};
  for (auto [a, b] : {std::pair{"2001", "2003"}, {"2002", "2007"}, {"2003", "2010"}}) {
    m.forward[a] = b;
    m.reverse[b] = a;
  }
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("anonymizer");

TEST_CASE("tokenizer handles quotes, escapes and comments") {
  auto toks = sql::tokenize("SELECT \"Worldwide $m\", 'it''s' -- note\nFROM t WHERE x>=1.5e3 /* c */");
  std::vector<std::string> texts;
  for (const auto& t : toks) texts.push_back(t.text);
  CHECK(texts == std::vector<std::string>{"SELECT", "Worldwide $m", ",", "it's", "FROM", "t", "WHERE", "x", ">=",
                                          "1.5e3", ""});
  CHECK(toks[1].kind == sql::TokenKind::quoted_identifier);
  CHECK(toks[3].kind == sql::TokenKind::string);
  CHECK(toks[9].kind == sql::TokenKind::real);
  CHECK(toks.back().kind == sql::TokenKind::end);
  CHECK_THROWS_AS(sql::tokenize("SELECT 'open"), sql::SqlError);
  try {
    sql::tokenize("SELECT a ? b");
    FAIL("expected SqlError");
  } catch (const sql::SqlError& e) {
    CHECK(e.offset() == 9);
    CHECK(std::string(e.what()).rfind("parse: ", 0) == 0);
  }
}

TEST_CASE("nominal country values map to other countries") {
  auto ds = classified("Country,Sales\nFrance,1\nGermany,2\nFrance,3\n");
  auto map = build_map(ds, 11);
  const auto* m = map.find("Country");
  REQUIRE(m);
  const auto& countries = ingest::gazetteer("country");
  for (const auto& [from, to] : m->forward) {
    CHECK(from != to);
    CHECK(std::find(countries.begin(), countries.end(), to) != countries.end());
    CHECK(to != "France");
    CHECK(to != "Germany");
  }
  CHECK(m->forward.size() == 2);
}

TEST_CASE("ordinal with a full pool is the identity") {
  auto ds = classified("Grade\nA\nB\nC\nD\nF\nB\n");
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    const auto map = build_map(ds, seed);
    const auto* m = map.find("Grade");
    for (const auto& [from, to] : m->forward) CHECK(from == to);
  }
}

TEST_CASE("continuous degenerate range keeps the value") {
  auto ds = classified("v\n5.0\n5.0\n\n5.0\n");
  auto map = build_map(ds, 3);
  auto rows = anonymize_rows(ds, map, {0, 1, 2, 3});
  CHECK(rows[0][0] == Cell{"5.0"});
  CHECK(rows[1][0] == Cell{"5.0"});
  CHECK_FALSE(rows[2][0].has_value());
  CHECK(rows[3][0] == Cell{"5.0"});
}

TEST_CASE("anonymize_rows edge cases") {
  auto ds = classified("a,b\n1,x\n,\n");
  auto map = build_map(ds, 5);
  CHECK(anonymize_rows(ds, map, {}).empty());
  auto rows = anonymize_rows(ds, map, {1});
  CHECK(rows == std::vector<Row>{{std::nullopt, std::nullopt}});
  CHECK_THROWS_AS(anonymize_rows(ds, map, {2}), Error);
}

TEST_CASE("sales rows stay in range and keep their order") {
  std::ifstream in(std::string(FACTFLOW_SOURCE_DIR) + "/data/carsales.csv", std::ios::binary);
  std::string csv((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto ds = ingest::classify_columns(ingest::load_csv(csv, "carsales"));
  const Column* sale = ds.find("Sale");
  REQUIRE(sale);
  REQUIRE(sale->data_class == DataClass::discrete);
  const auto sale_idx = static_cast<std::size_t>(sale - ds.columns.data());

  std::vector<std::size_t> all(ds.row_count);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto rows = anonymize_rows(ds, build_map(ds, 7), all);

  std::int64_t lo = INT64_MAX, hi = INT64_MIN;
  for (const auto& c : sale->cells) {
    lo = std::min(lo, *text::parse_int(*c));
    hi = std::max(hi, *text::parse_int(*c));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto a = *text::parse_int(*rows[i][sale_idx]);
    CHECK(a >= lo);
    CHECK(a <= hi + (hi - lo));
  }
  // Pairwise orderings, compared with the originals.
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto oi = *text::parse_int(*sale->cells[i]), oj = *text::parse_int(*sale->cells[j]);
      const auto ai = *text::parse_int(*rows[i][sale_idx]), aj = *text::parse_int(*rows[j][sale_idx]);
      if ((oi < oj) != (ai < aj) || (oi == oj) != (ai == aj)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("literal rewriting by column context") {
  AnonymizationMap map{.seed = 1};
  ColumnMapping country{.column = "Country", .data_class = DataClass::nominal};
  country.forward = {{"France", "Italy"}, {"O'Land", "Spain"}};
  country.reverse = {{"Italy", "France"}, {"Spain", "O'Land"}};
  map.columns.push_back(country);
  map.columns.push_back(hand_discrete());

  CHECK(deanonymize_literals("SELECT * FROM t WHERE Country='Italy'", map) ==
        "SELECT * FROM t WHERE Country='France'");
  CHECK(deanonymize_literals("SELECT * FROM t", map) == "SELECT * FROM t");
  CHECK(deanonymize_literals("SELECT * FROM t WHERE \"Country\" IN ('Italy', 'Spain')", map) ==
        "SELECT * FROM t WHERE \"Country\" IN ('France', 'O''Land')");
  CHECK(deanonymize_literals("SELECT * FROM t WHERE 'Italy' = t.Country", map) ==
        "SELECT * FROM t WHERE 'France' = t.Country");

  // Discrete: 2007 is an anonymized value, 2008 is not.
  CHECK(deanonymize_literals("SELECT * FROM t WHERE Year = 2007", map) == "SELECT * FROM t WHERE Year = 2002");
  CHECK(deanonymize_literals("SELECT * FROM t WHERE Year = 2008", map) == "SELECT * FROM t WHERE Year = 2008");
  CHECK(deanonymize_literals("SELECT * FROM t WHERE Year BETWEEN 2003 AND 2010", map) ==
        "SELECT * FROM t WHERE Year BETWEEN 2001 AND 2003");
  CHECK(deanonymize_literals("SELECT * FROM t WHERE Year NOT IN (2003, 2010)", map) ==
        "SELECT * FROM t WHERE Year NOT IN (2001, 2003)");

  // Bare numbers have no column and stay put.
  CHECK(deanonymize_literals("SELECT Year * 2007 FROM t LIMIT 2010", map) == "SELECT Year * 2007 FROM t LIMIT 2010");
  // Bare strings follow the only column that knows them.
  CHECK(deanonymize_literals("SELECT 'Italy' AS c FROM t", map) == "SELECT 'France' AS c FROM t");
  // Other columns are left alone.
  CHECK(deanonymize_literals("SELECT * FROM t WHERE Brand = 'Italy'", map) ==
        "SELECT * FROM t WHERE Brand = 'Italy'");
  // Unlexable text is returned untouched.
  CHECK(deanonymize_literals("SELECT 'Italy", map) == "SELECT 'Italy");
}

TEST_CASE("negative discrete literals") {
  Dataset ds{.name = "t"};
  Column c{.name = "d", .data_class = DataClass::discrete};
  for (const char* v : {"-5", "-2", "0", "3"}) c.cells.emplace_back(v);
  ds.columns.push_back(c);
  ds.row_count = 4;
  auto map = build_map(ds, 21);
  const auto* m = map.find("d");
  for (const auto& [from, to] : m->forward) {
    CHECK(deanonymize_literals("SELECT d FROM t WHERE d = " + to, map) == "SELECT d FROM t WHERE d = " + from);
  }
}

TEST_CASE("synthesis when the gazetteer runs out") {
  std::string csv = "Word\n";
  for (int i = 0; i < 40; ++i) csv += "Tok" + std::to_string(100 + i) + "\n";
  auto ds = classified(csv);
  REQUIRE(ds.columns[0].entity_type == std::string(ingest::kGenericToken));
  auto map = build_map(ds, 9);
  std::set<std::string> seen;
  for (const auto& [from, to] : map.find("Word")->forward) {
    CHECK(to.size() == from.size());
    CHECK(std::isupper(static_cast<unsigned char>(to[0])));
    CHECK(std::islower(static_cast<unsigned char>(to[1])));
    CHECK(std::isdigit(static_cast<unsigned char>(to[3])));
    CHECK(from != to);
    CHECK(seen.insert(to).second);
  }
  CHECK_THROWS_AS(build_map(ds, 9, {.allow_synthesis = false}), Error);
}

TEST_CASE("map survives a JSON round trip") {
  auto ds = classified("Country,Grade,Year,Price\nFrance,A,2001,1.5\nJapan,C,2004,\nPeru,B,2001,7.25\n");
  auto map = build_map(ds, 77);
  CHECK(map_from_json(to_json(map)) == map);
  CHECK(map_from_json(nlohmann::json::parse(to_json(map).dump())) == map);
  CHECK_THROWS_AS(map_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("random tables: determinism, bijectivity, order, range") {
  Rng gen(2024, "anon-props");
  const std::vector<std::string> grades = {"A", "B", "C", "D", "F"};
  const auto& countries = ingest::gazetteer("country");
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 1 + gen.below(60);
    std::string csv = "Country,Grade,Count,Price\n";
    for (std::size_t r = 0; r < n; ++r) {
      csv += countries[gen.below(12)] + ",";
      csv += grades[gen.below(5)] + ",";
      csv += std::to_string(gen.uniform_int(-50, 500)) + ",";
      csv += fmt::format("{:.2f}", gen.uniform_real(-10, 10)) + "\n";
    }
    auto ds = classified(csv);
    REQUIRE(ds.find("Price")->data_class == DataClass::continuous);
    const std::uint64_t seed = gen.next_u64();
    auto map = build_map(ds, seed);
    CHECK(build_map(ds, seed) == map);

    for (const auto& m : map.columns) {
      if (m.data_class == DataClass::continuous) {
        const auto& col = *ds.find(m.column);
        double lo = 1e300, hi = -1e300;
        for (const auto& c : col.cells) {
          lo = std::min(lo, *text::parse_real(*c));
          hi = std::max(hi, *text::parse_real(*c));
        }
        for (const auto& c : m.cells) {
          const double v = *text::parse_real(*c);
          CHECK(v >= lo);
          CHECK(v <= hi);
        }
        continue;
      }
      CHECK(m.forward.size() == m.reverse.size());
      for (const auto& [from, to] : m.forward) CHECK(m.reverse.at(to) == from);
      std::vector<std::string> keys;
      for (const auto& kv : m.forward) keys.push_back(kv.first);
      for (std::size_t i = 0; i < keys.size(); ++i) {
        for (std::size_t j = 0; j < keys.size(); ++j) {
          if (m.data_class == DataClass::discrete) {
            const bool lt = *text::parse_int(keys[i]) < *text::parse_int(keys[j]);
            CHECK(lt == (*text::parse_int(m.forward.at(keys[i])) < *text::parse_int(m.forward.at(keys[j]))));
          } else if (m.data_class == DataClass::ordinal) {
            auto rank = [&](const std::string& v) { return std::find(grades.begin(), grades.end(), v); };
            CHECK((rank(keys[i]) < rank(keys[j])) ==
                  (rank(m.forward.at(keys[i])) < rank(m.forward.at(keys[j]))));
          } else {
            CHECK(keys[i] != m.forward.at(keys[i]));
          }
        }
      }
    }
  }
}

TEST_SUITE_END();
