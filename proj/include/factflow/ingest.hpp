#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factflow/error.hpp"

namespace factflow::ingest {

enum class DataClass { nominal, ordinal, discrete, continuous };

std::string_view to_string(DataClass c);
std::optional<DataClass> parse_data_class(std::string_view s);

inline constexpr std::string_view kGenericToken = "generic-token";

using Cell = std::optional<std::string>;

struct Column {
  std::string name;
  std::optional<DataClass> data_class;
  std::vector<Cell> cells;
  // Nominal columns: gazetteer name ("country", "city", "company") or
  // kGenericToken.
  std::optional<std::string> entity_type;
  // Ordinal columns: every valid level, lowest first.
  std::vector<std::string> ordinal_pool;

  bool is_numeric() const {
    return data_class == DataClass::discrete || data_class == DataClass::continuous;
  }
  friend bool operator==(const Column&, const Column&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Column> columns;
  std::size_t row_count = 0;

  const Column* find(std::string_view column_name) const;
  bool classified() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class CsvError : public Error {
 public:
  CsvError(const std::string& message, std::size_t row, std::size_t column)
      : Error(ErrorKind::csv_parse, message), row_(row), column_(column) {}
  // 1-based; row 1 is the header line.
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// RFC-4180 CSV with a mandatory header row. Empty cells become null.
Dataset load_csv(std::string_view bytes, std::string name);

// Assigns a data class to every column; overrides win over inference.
// Columns that already carry a class (and no override) are left untouched,
// which makes the operation idempotent.
Dataset classify_columns(Dataset ds, const std::map<std::string, DataClass>& overrides = {});

struct NumericStats {
  double min = 0, max = 0, mean = 0, median = 0, p25 = 0, p75 = 0;
  friend bool operator==(const NumericStats&, const NumericStats&) = default;
};

struct StringStats {
  std::size_t unique_count = 0;
  std::vector<std::pair<std::string, std::size_t>> top_values;  // at most 5
  friend bool operator==(const StringStats&, const StringStats&) = default;
};

struct ColumnProfile {
  std::optional<NumericStats> numeric;  // discrete / continuous
  std::optional<StringStats> strings;   // nominal / ordinal
  std::size_t null_count = 0;
  friend bool operator==(const ColumnProfile&, const ColumnProfile&) = default;
};

// Linear interpolation between closest ranks ("type 7"). sorted must be
// non-empty and ascending; q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

ColumnProfile profile_column(const Column& col);

// Helpers shared by classification and the anonymizer.
bool is_iso_date(std::string_view s);
std::vector<std::string> distinct_values(const Column& col);  // sorted, nulls excluded

// Bundled ordered scales, first match wins.
struct KnownScale {
  std::string name;
  std::vector<std::string> levels;
};
const std::vector<KnownScale>& known_scales();

// Entity gazetteer values for an entity type; empty for generic tokens.
const std::vector<std::string>& gazetteer(std::string_view entity_type);
std::string infer_entity_type(const Column& col);

}  // namespace factflow::ingest
