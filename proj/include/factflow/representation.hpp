#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "factflow/anonymizer.hpp"
#include "factflow/ingest.hpp"
#include "json.hpp"

namespace factflow::repr {

inline constexpr std::size_t kDefaultBudget = 2048;

struct ColumnSummary {
  std::string name;
  ingest::DataClass data_class = ingest::DataClass::nominal;
  std::string sql_type;
  ingest::ColumnProfile profile;  // string top values hold anonymized values
  std::string stats_line;
};

// Prompt payload standing in for the raw dataset.
struct DatasetRepresentation {
  std::string table_name;
  std::string ddl;
  std::string stats_block;
  std::vector<std::string> header;
  std::vector<anon::Row> example_rows;
  std::size_t token_estimate = 0;
  std::vector<ColumnSummary> columns;

  // DDL, blank line, stats, and when rows fit: blank line, CSV header, rows.
  std::string text() const;
  nlohmann::json to_json() const;
};

std::string sql_type(ingest::DataClass c);  // TEXT / INTEGER / REAL
std::string quote_identifier(std::string_view name);
std::string emit_ddl(const ingest::Dataset& ds);

// ceil(chars / 4)
std::size_t estimate_tokens(std::string_view text);

// One line per column: `<name> (<class>): <stat>=<value>, ...`. Numeric
// stats are aggregates of the original data; the most frequent string
// values are reported through the anonymization map.
std::string emit_stats(const ingest::Dataset& ds, const anon::AnonymizationMap& map);

std::string csv_line(const anon::Row& cells);

// Smallest budget build_representation accepts for this dataset.
std::size_t minimum_budget(const ingest::Dataset& ds, const anon::AnonymizationMap& map);

// Rows are drawn without replacement from Rng(seed, "repr:rows") and appended
// until the next one would push the text past the budget.
DatasetRepresentation build_representation(const ingest::Dataset& ds, const anon::AnonymizationMap& map,
                                           std::size_t budget_tokens, std::uint64_t seed);

}  // namespace factflow::repr
