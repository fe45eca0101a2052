#include "factflow/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "factflow/assets.hpp"
#include "factflow/text.hpp"

namespace factflow::ingest {

std::string_view to_string(DataClass c) {
  switch (c) {
    case DataClass::nominal: return "nominal";
    case DataClass::ordinal: return "ordinal";
    case DataClass::discrete: return "discrete";
    case DataClass::continuous: return "continuous";
  }
  return "nominal";
}

std::optional<DataClass> parse_data_class(std::string_view s) {
  for (DataClass c : {DataClass::nominal, DataClass::ordinal, DataClass::discrete,
                      DataClass::continuous}) {
    if (text::iequals(s, to_string(c))) return c;
  }
  return std::nullopt;
}

const Column* Dataset::find(std::string_view column_name) const {
  for (const auto& c : columns) {
    if (c.name == column_name) return &c;
  }
  return nullptr;
}

bool Dataset::classified() const {
  return std::all_of(columns.begin(), columns.end(),
                     [](const Column& c) { return c.data_class.has_value(); });
}

// ---------------------------------------------------------------------------
// CSV

namespace {

class CsvReader {
 public:
  explicit CsvReader(std::string_view bytes) : in_(bytes) {
    if (in_.substr(0, 3) == "\xEF\xBB\xBF") in_.remove_prefix(3);
  }

  bool at_end() const { return pos_ >= in_.size(); }
  std::size_t line() const { return record_; }

  // Reads one record; returns false at end of input.
  bool next(std::vector<std::string>& fields, std::vector<bool>& quoted) {
    fields.clear();
    quoted.clear();
    if (at_end()) return false;
    ++record_;
    std::string field;
    bool field_quoted = false;
    bool after_quote = false;
    bool in_quotes = false;
    std::size_t field_start_line = record_;

    auto finish_field = [&] {
      fields.push_back(std::move(field));
      quoted.push_back(field_quoted);
      field.clear();
      field_quoted = false;
      after_quote = false;
    };

    while (pos_ < in_.size()) {
      char c = in_[pos_];
      if (in_quotes) {
        if (c == '"') {
          if (pos_ + 1 < in_.size() && in_[pos_ + 1] == '"') {
            field.push_back('"');
            pos_ += 2;
            continue;
          }
          in_quotes = false;
          after_quote = true;
          ++pos_;
          continue;
        }
        field.push_back(c);
        ++pos_;
        continue;
      }
      if (c == ',') {
        finish_field();
        ++pos_;
        continue;
      }
      if (c == '\r' || c == '\n') {
        ++pos_;
        if (c == '\r' && pos_ < in_.size() && in_[pos_] == '\n') ++pos_;
        finish_field();
        return true;
      }
      if (after_quote) {
        throw CsvError(fail("unexpected character after closing quote"), record_,
                       fields.size() + 1);
      }
      if (c == '"') {
        if (!field.empty()) {
          throw CsvError(fail("quote inside unquoted field"), record_, fields.size() + 1);
        }
        in_quotes = true;
        field_quoted = true;
        field_start_line = record_;
        ++pos_;
        continue;
      }
      field.push_back(c);
      ++pos_;
    }
    if (in_quotes) {
      throw CsvError(fail("unbalanced quote: field never closed"), field_start_line,
                     fields.size() + 1);
    }
    finish_field();
    return true;
  }

 private:
  std::string fail(const std::string& what) const { return "csv: " + what; }

  std::string_view in_;
  std::size_t pos_ = 0;
  std::size_t record_ = 0;
};

}  // namespace

Dataset load_csv(std::string_view bytes, std::string name) {
  if (text::trim(bytes).empty()) throw CsvError("csv: empty file", 0, 0);

  CsvReader reader(bytes);
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  reader.next(fields, quoted);

  Dataset ds;
  ds.name = std::move(name);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string col = text::trim(fields[i]);
    if (col.empty()) {
      throw CsvError("csv: empty column name in header at row 1, column " + std::to_string(i + 1),
                     1, i + 1);
    }
    if (!seen.insert(col).second) {
      throw CsvError("csv: duplicate column name '" + col + "' at row 1, column " +
                         std::to_string(i + 1),
                     1, i + 1);
    }
    Column column;
    column.name = col;
    ds.columns.push_back(std::move(column));
  }

  const std::size_t width = ds.columns.size();
  while (reader.next(fields, quoted)) {
    // A bare trailing newline yields one empty unquoted field; skip it when it
    // is the last thing in the file.
    bool blank = fields.size() == 1 && fields[0].empty() && !quoted[0];
    if (blank && reader.at_end()) break;
    if (blank && width > 1) {
      throw CsvError("csv: blank line at row " + std::to_string(reader.line()) + " (expected " +
                         std::to_string(width) + " cells)",
                     reader.line(), 1);
    }
    if (fields.size() != width) {
      throw CsvError("csv: ragged row at row " + std::to_string(reader.line()) + ": expected " +
                         std::to_string(width) + " cells, found " + std::to_string(fields.size()),
                     reader.line(), std::min(fields.size(), width) + 1);
    }
    for (std::size_t i = 0; i < width; ++i) {
      if (fields[i].empty()) {
        ds.columns[i].cells.emplace_back(std::nullopt);
      } else {
        ds.columns[i].cells.emplace_back(std::move(fields[i]));
      }
    }
    ++ds.row_count;
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Classification

bool is_iso_date(std::string_view s) {
  if (s.size() < 10) return false;
  auto digit = [&](std::size_t i) { return std::isdigit(static_cast<unsigned char>(s[i])) != 0; };
  if (!(digit(0) && digit(1) && digit(2) && digit(3) && s[4] == '-' && digit(5) && digit(6) &&
        s[7] == '-' && digit(8) && digit(9))) {
    return false;
  }
  int month = (s[5] - '0') * 10 + (s[6] - '0');
  int day = (s[8] - '0') * 10 + (s[9] - '0');
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  if (s.size() == 10) return true;
  // Optional time part: "T" or " " followed by HH:MM[:SS...]
  if (s[10] != 'T' && s[10] != ' ') return false;
  std::string_view t = s.substr(11);
  return t.size() >= 5 && std::isdigit(static_cast<unsigned char>(t[0])) &&
         std::isdigit(static_cast<unsigned char>(t[1])) && t[2] == ':';
}

std::vector<std::string> distinct_values(const Column& col) {
  std::set<std::string> values;
  for (const auto& cell : col.cells) {
    if (cell) values.insert(*cell);
  }
  return {values.begin(), values.end()};
}

const std::vector<KnownScale>& known_scales() {
  static const std::vector<KnownScale> scales = [] {
    std::vector<KnownScale> out;
    for (const auto& name : assets::lines("scales/index.txt")) {
      out.push_back({name, assets::lines("scales/" + name + ".txt")});
    }
    return out;
  }();
  return scales;
}

const std::vector<std::string>& gazetteer(std::string_view entity_type) {
  static const std::unordered_map<std::string, std::vector<std::string>> lists = [] {
    std::unordered_map<std::string, std::vector<std::string>> out;
    for (const auto& name : assets::lines("gazetteers/index.txt")) {
      out[name] = assets::lines("gazetteers/" + name + ".txt");
    }
    return out;
  }();
  static const std::vector<std::string> empty;
  auto it = lists.find(std::string(entity_type));
  return it == lists.end() ? empty : it->second;
}

namespace {

struct NameHint {
  std::string_view keyword;
  std::string_view entity;
};

constexpr NameHint kNameHints[] = {
    {"country", "country"}, {"nation", "country"},       {"city", "city"},
    {"town", "city"},       {"studio", "company"},       {"company", "company"},
    {"brand", "company"},   {"manufacturer", "company"}, {"maker", "company"},
};

bool has_company_suffix(std::string_view value) {
  static const std::vector<std::string> suffixes = assets::lines("gazetteers/company_suffixes.txt");
  for (const auto& suffix : suffixes) {
    if (value.size() > suffix.size() + 1 && value.ends_with(suffix) &&
        value[value.size() - suffix.size() - 1] == ' ') {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string infer_entity_type(const Column& col) {
  auto values = distinct_values(col);
  if (values.empty()) return std::string(kGenericToken);

  for (const auto& entity : assets::lines("gazetteers/index.txt")) {
    const auto& list = gazetteer(entity);
    std::unordered_set<std::string> known(list.begin(), list.end());
    if (std::all_of(values.begin(), values.end(),
                    [&](const std::string& v) { return known.contains(v); })) {
      return entity;
    }
  }
  if (std::all_of(values.begin(), values.end(),
                  [](const std::string& v) { return has_company_suffix(v); })) {
    return "company";
  }
  for (const auto& hint : kNameHints) {
    if (text::contains_icase(col.name, hint.keyword)) return std::string(hint.entity);
  }
  return std::string(kGenericToken);
}

namespace {

void require_cells(const Column& col, DataClass c) {
  for (std::size_t r = 0; r < col.cells.size(); ++r) {
    const auto& cell = col.cells[r];
    if (!cell) continue;
    bool ok = c == DataClass::discrete ? text::parse_int(*cell).has_value()
                                       : text::parse_real(*cell).has_value();
    if (!ok) {
      throw Error(ErrorKind::validation,
                  "column '" + col.name + "' cannot be " + std::string(to_string(c)) +
                      ": row " + std::to_string(r + 1) + " holds '" + *cell + "'");
    }
  }
}

void assign(Column& col, DataClass c) {
  col.data_class = c;
  col.entity_type.reset();
  col.ordinal_pool.clear();
  auto values = distinct_values(col);
  switch (c) {
    case DataClass::discrete:
    case DataClass::continuous:
      require_cells(col, c);
      break;
    case DataClass::nominal:
      col.entity_type = infer_entity_type(col);
      break;
    case DataClass::ordinal: {
      for (const auto& scale : known_scales()) {
        std::unordered_set<std::string> levels(scale.levels.begin(), scale.levels.end());
        if (std::all_of(values.begin(), values.end(),
                        [&](const std::string& v) { return levels.contains(v); })) {
          col.ordinal_pool = scale.levels;
          return;
        }
      }
      // No bundled scale covers the column: the observed values, sorted, are
      // the pool (ISO dates sort chronologically this way).
      col.ordinal_pool = values;
      break;
    }
  }
}

DataClass infer_class(const Column& col) {
  auto values = distinct_values(col);
  if (values.empty()) return DataClass::nominal;
  if (std::all_of(values.begin(), values.end(),
                  [](const std::string& v) { return text::parse_int(v).has_value(); })) {
    return DataClass::discrete;
  }
  if (std::all_of(values.begin(), values.end(),
                  [](const std::string& v) { return text::parse_real(v).has_value(); })) {
    return DataClass::continuous;
  }
  if (std::all_of(values.begin(), values.end(),
                  [](const std::string& v) { return is_iso_date(v); })) {
    return DataClass::ordinal;
  }
  for (const auto& scale : known_scales()) {
    std::unordered_set<std::string> levels(scale.levels.begin(), scale.levels.end());
    if (std::all_of(values.begin(), values.end(),
                    [&](const std::string& v) { return levels.contains(v); })) {
      return DataClass::ordinal;
    }
  }
  return DataClass::nominal;
}

}  // namespace

Dataset classify_columns(Dataset ds, const std::map<std::string, DataClass>& overrides) {
  for (const auto& [name, cls] : overrides) {
    if (!ds.find(name)) {
      throw Error(ErrorKind::validation, "classification override names unknown column '" + name + "'");
    }
  }
  for (auto& col : ds.columns) {
    auto it = overrides.find(col.name);
    if (it != overrides.end()) {
      assign(col, it->second);
    } else if (!col.data_class) {
      assign(col, infer_class(col));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Profiling

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

ColumnProfile profile_column(const Column& col) {
  if (!col.data_class) {
    throw Error(ErrorKind::validation, "column '" + col.name + "' is not classified");
  }
  ColumnProfile profile;
  std::size_t non_null = 0;
  for (const auto& cell : col.cells) {
    if (cell) {
      ++non_null;
    } else {
      ++profile.null_count;
    }
  }
  if (non_null == 0) {
    throw Error(ErrorKind::validation, "column '" + col.name + "' has only null cells; cannot profile");
  }

  if (col.is_numeric()) {
    std::vector<double> values;
    values.reserve(non_null);
    for (const auto& cell : col.cells) {
      if (!cell) continue;
      auto v = text::parse_real(*cell);
      if (!v) {
        throw Error(ErrorKind::validation,
                    "column '" + col.name + "' holds non-numeric value '" + *cell + "'");
      }
      values.push_back(*v);
    }
    std::sort(values.begin(), values.end());
    long double sum = 0;
    for (double v : values) sum += v;
    NumericStats s;
    s.min = values.front();
    s.max = values.back();
    s.mean = static_cast<double>(sum / static_cast<long double>(values.size()));
    s.median = quantile_sorted(values, 0.5);
    s.p25 = quantile_sorted(values, 0.25);
    s.p75 = quantile_sorted(values, 0.75);
    profile.numeric = s;
    return profile;
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& cell : col.cells) {
    if (cell) ++counts[*cell];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is ordered by value, so a stable sort on count keeps ties ascending.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > 5) ranked.resize(5);
  profile.strings = StringStats{counts.size(), std::move(ranked)};
  return profile;
}

}  // namespace factflow::ingest
