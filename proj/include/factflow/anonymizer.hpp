#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "factflow/ingest.hpp"
#include "factflow/rng.hpp"
#include "json.hpp"

namespace factflow::anon {

// Substitution for one column.
//
// nominal/ordinal/discrete: forward and reverse are mutual inverses over the
// observed values. Discrete keys are canonical integer text.
// continuous: no bijection; cells holds the anonymized value of every row.
struct ColumnMapping {
  std::string column;
  ingest::DataClass data_class = ingest::DataClass::nominal;
  std::map<std::string, std::string> forward;
  std::map<std::string, std::string> reverse;
  std::vector<ingest::Cell> cells;

  friend bool operator==(const ColumnMapping&, const ColumnMapping&) = default;
};

struct AnonymizationMap {
  std::uint64_t seed = 0;
  std::vector<ColumnMapping> columns;  // dataset column order

  const ColumnMapping* find(std::string_view column) const;
  friend bool operator==(const AnonymizationMap&, const AnonymizationMap&) = default;
};

struct AnonymizerOptions {
  // When the entity gazetteer runs out of unused values, synthesize tokens
  // that keep the original's length and character classes.
  bool allow_synthesis = true;
};

// Per-column streams are derived as Rng(seed, "anon:" + column name).
AnonymizationMap build_map(const ingest::Dataset& ds, std::uint64_t seed,
                           const AnonymizerOptions& options = {});

using Row = std::vector<ingest::Cell>;

std::vector<Row> anonymize_rows(const ingest::Dataset& ds, const AnonymizationMap& map,
                                const std::vector<std::size_t>& rows);

// Rewrites quoted string and numeric literals that equal an anonymized value
// back to the original. The column a literal is compared against decides
// which mapping applies; literals without a column context are rewritten only
// when every column that knows the value agrees on the original.
std::string deanonymize_literals(std::string_view sql_text, const AnonymizationMap& map);

// Random token with the same length and character classes as `like`
// (upper -> upper, lower -> lower, digit -> digit, other bytes kept).
std::string synthesize_token(std::string_view like, Rng& rng);

nlohmann::json to_json(const AnonymizationMap& map);
AnonymizationMap map_from_json(const nlohmann::json& doc);

}  // namespace factflow::anon
