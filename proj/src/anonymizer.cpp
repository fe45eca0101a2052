#include "factflow/anonymizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "factflow/sql_lexer.hpp"
#include "factflow/text.hpp"

namespace factflow::anon {

using ingest::Cell;
using ingest::Column;
using ingest::DataClass;
using ingest::Dataset;

const ColumnMapping* AnonymizationMap::find(std::string_view column) const {
  for (const auto& c : columns) {
    if (c.column == column) return &c;
  }
  return nullptr;
}

namespace {

std::string canonical_int(std::string_view s) {
  auto v = text::parse_int(s);
  return v ? std::to_string(*v) : std::string(s);
}

// m distinct values from [0, n), ascending (Floyd's sampling).
std::vector<std::uint64_t> sample_sorted(Rng& rng, std::uint64_t n, std::size_t m) {
  std::set<std::uint64_t> picked;
  for (std::uint64_t j = n - m; j < n; ++j) {
    std::uint64_t t = rng.below(j + 1);
    if (!picked.insert(t).second) picked.insert(j);
  }
  return {picked.begin(), picked.end()};
}

char random_like(char c, Rng& rng) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>('A' + rng.below(26));
  if (c >= 'a' && c <= 'z') return static_cast<char>('a' + rng.below(26));
  if (c >= '0' && c <= '9') return static_cast<char>('0' + rng.below(10));
  return c;
}

void add_pair(ColumnMapping& m, const std::string& from, const std::string& to) {
  m.forward[from] = to;
  m.reverse[to] = from;
}

ColumnMapping map_nominal(const Column& col, Rng& rng, const AnonymizerOptions& options) {
  ColumnMapping m;
  m.column = col.name;
  m.data_class = DataClass::nominal;
  const auto observed = ingest::distinct_values(col);
  std::set<std::string> taken;  // lower-cased observed and assigned values
  for (const auto& v : observed) taken.insert(text::to_lower(v));

  const std::string entity = col.entity_type ? *col.entity_type : ingest::infer_entity_type(col);
  std::vector<std::string> pool;
  for (const auto& g : ingest::gazetteer(entity)) {
    if (!taken.count(text::to_lower(g))) pool.push_back(g);
  }
  rng.shuffle(pool);

  std::size_t next = 0;
  for (const auto& value : observed) {
    std::string replacement;
    while (next < pool.size() && replacement.empty()) {
      const auto& cand = pool[next++];
      if (taken.insert(text::to_lower(cand)).second) replacement = cand;
    }
    if (replacement.empty()) {
      if (!options.allow_synthesis) {
        throw Error(ErrorKind::validation,
                    fmt::format("column '{}' has {} distinct values but the {} gazetteer has only {} unused",
                                col.name, observed.size(), entity, pool.size()));
      }
      for (int attempt = 0; attempt < 64 && replacement.empty(); ++attempt) {
        std::string cand = synthesize_token(value, rng);
        if (attempt >= 32) {
          // Tokens without letters or digits have nothing to vary.
          for (auto& ch : cand) {
            if (!std::isalnum(static_cast<unsigned char>(ch))) ch = static_cast<char>('a' + rng.below(26));
          }
        }
        if (taken.insert(text::to_lower(cand)).second) replacement = cand;
      }
      if (replacement.empty()) {
        throw Error(ErrorKind::validation,
                    fmt::format("cannot synthesize a replacement for '{}' in column '{}'", value, col.name));
      }
    }
    add_pair(m, value, replacement);
  }
  return m;
}

ColumnMapping map_ordinal(const Column& col, Rng& rng) {
  ColumnMapping m;
  m.column = col.name;
  m.data_class = DataClass::ordinal;
  const auto& pool = col.ordinal_pool;
  std::vector<std::size_t> ranks;
  for (const auto& v : ingest::distinct_values(col)) {
    auto it = std::find(pool.begin(), pool.end(), v);
    if (it == pool.end()) {
      throw Error(ErrorKind::validation,
                  fmt::format("ordinal column '{}' has level '{}' outside its pool", col.name, v));
    }
    ranks.push_back(static_cast<std::size_t>(it - pool.begin()));
  }
  std::sort(ranks.begin(), ranks.end());
  const auto chosen = sample_sorted(rng, pool.size(), ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) add_pair(m, pool[ranks[i]], pool[chosen[i]]);
  return m;
}

ColumnMapping map_discrete(const Column& col, Rng& rng) {
  ColumnMapping m;
  m.column = col.name;
  m.data_class = DataClass::discrete;
  std::set<std::int64_t> distinct;
  for (const auto& c : col.cells) {
    if (!c) continue;
    auto v = text::parse_int(*c);
    if (!v) {
      throw Error(ErrorKind::validation,
                  fmt::format("discrete column '{}' has non-integer value '{}'", col.name, *c));
    }
    distinct.insert(*v);
  }
  if (distinct.empty()) return m;
  const std::vector<std::int64_t> values(distinct.begin(), distinct.end());
  const __int128 lo = values.front();
  const __int128 span = static_cast<__int128>(values.back()) - lo;
  __int128 hi = static_cast<__int128>(values.back()) + span;
  hi = std::min<__int128>(hi, std::numeric_limits<std::int64_t>::max());
  __int128 width = hi - lo + 1;
  width = std::min<__int128>(width, std::numeric_limits<std::uint64_t>::max());

  std::vector<std::int64_t> target;
  bool fixed_point = true;
  for (int attempt = 0; attempt < 16 && fixed_point; ++attempt) {
    const auto offsets = sample_sorted(rng, static_cast<std::uint64_t>(width), values.size());
    target.clear();
    fixed_point = false;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      target.push_back(static_cast<std::int64_t>(lo + offsets[i]));
      fixed_point = fixed_point || target.back() == values[i];
    }
  }
  const auto shift_max = static_cast<std::int64_t>(std::min<__int128>(span, hi - values.back()));
  if (fixed_point && shift_max >= 1) {
    // Shifting by s in [1, span] keeps order and moves every value.
    const std::int64_t s = rng.uniform_int(1, shift_max);
    target.clear();
    for (auto v : values) target.push_back(v + s);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    add_pair(m, std::to_string(values[i]), std::to_string(target[i]));
  }
  return m;
}

int decimals_of(std::string_view s) {
  auto dot = s.find('.');
  if (dot == std::string_view::npos) return 0;
  std::size_t end = dot + 1;
  while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
  return static_cast<int>(end - dot - 1);
}

ColumnMapping map_continuous(const Column& col, Rng& rng) {
  ColumnMapping m;
  m.column = col.name;
  m.data_class = DataClass::continuous;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  int decimals = 0;
  for (const auto& c : col.cells) {
    if (!c) continue;
    auto v = text::parse_real(*c);
    if (!v) {
      throw Error(ErrorKind::validation,
                  fmt::format("continuous column '{}' has non-numeric value '{}'", col.name, *c));
    }
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
    decimals = std::max(decimals, decimals_of(*c));
  }
  decimals = std::min(decimals, 9);
  const double scale = std::pow(10.0, decimals);

  m.cells.reserve(col.cells.size());
  for (const auto& c : col.cells) {
    if (!c) {
      m.cells.emplace_back(std::nullopt);
      continue;
    }
    const double original = *text::parse_real(*c);
    double v = lo;
    for (int attempt = 0; attempt < 32; ++attempt) {
      v = std::round(rng.uniform_real(lo, hi) * scale) / scale;
      v = std::clamp(v, lo, hi);
      if (v != original || lo == hi) break;
    }
    m.cells.emplace_back(fmt::format("{:.{}f}", v, decimals));
  }
  return m;
}

}  // namespace

std::string synthesize_token(std::string_view like, Rng& rng) {
  std::string out;
  out.reserve(like.size());
  for (char c : like) out.push_back(random_like(c, rng));
  return out;
}

AnonymizationMap build_map(const Dataset& ds, std::uint64_t seed, const AnonymizerOptions& options) {
  if (!ds.classified()) throw Error(ErrorKind::validation, "dataset must be classified before anonymization");
  AnonymizationMap map;
  map.seed = seed;
  for (const auto& col : ds.columns) {
    Rng rng(seed, "anon:" + col.name);
    switch (*col.data_class) {
      case DataClass::nominal: map.columns.push_back(map_nominal(col, rng, options)); break;
      case DataClass::ordinal: map.columns.push_back(map_ordinal(col, rng)); break;
      case DataClass::discrete: map.columns.push_back(map_discrete(col, rng)); break;
      case DataClass::continuous: map.columns.push_back(map_continuous(col, rng)); break;
    }
  }
  return map;
}

std::vector<Row> anonymize_rows(const Dataset& ds, const AnonymizationMap& map,
                                const std::vector<std::size_t>& rows) {
  std::vector<const ColumnMapping*> mappings;
  for (const auto& col : ds.columns) {
    const auto* m = map.find(col.name);
    if (!m) throw Error(ErrorKind::validation, fmt::format("no mapping for column '{}'", col.name));
    mappings.push_back(m);
  }
  std::vector<Row> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    if (r >= ds.row_count) {
      throw Error(ErrorKind::validation,
                  fmt::format("row index {} out of range (dataset has {} rows)", r, ds.row_count));
    }
    Row row;
    row.reserve(ds.columns.size());
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      const Cell& cell = ds.columns[c].cells[r];
      const ColumnMapping& m = *mappings[c];
      if (!cell) {
        row.emplace_back(std::nullopt);
      } else if (m.data_class == DataClass::continuous) {
        if (r >= m.cells.size()) throw Error(ErrorKind::validation, "continuous mapping does not cover row");
        row.push_back(m.cells[r]);
      } else {
        const std::string key = m.data_class == DataClass::discrete ? canonical_int(*cell) : *cell;
        auto it = m.forward.find(key);
        if (it == m.forward.end()) {
          throw Error(ErrorKind::validation,
                      fmt::format("value '{}' of column '{}' is not in the map", *cell, m.column));
        }
        row.emplace_back(it->second);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---- literal rewriting ----

namespace {

using sql::Token;
using sql::TokenKind;

bool is_literal(const Token& t) {
  return t.kind == TokenKind::string || t.kind == TokenKind::integer || t.kind == TokenKind::real;
}

bool is_comparison(const Token& t) {
  if (t.kind != TokenKind::symbol) return false;
  static const std::set<std::string> ops = {"=", "==", "<>", "!=", "<", "<=", ">", ">="};
  return ops.count(t.text) > 0;
}

bool is_column_ref(const std::vector<Token>& toks, std::size_t i) {
  const Token& t = toks[i];
  if (t.kind == TokenKind::quoted_identifier) return true;
  if (t.kind != TokenKind::identifier) return false;
  static const std::set<std::string> reserved = {"AND", "OR", "NOT", "IN", "BETWEEN", "LIKE", "IS", "NULL",
                                                 "SELECT", "FROM", "WHERE", "HAVING", "BY", "ON", "WHEN",
                                                 "THEN", "ELSE", "CASE", "END", "TRUE", "FALSE"};
  std::string upper;
  for (char c : t.text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (reserved.count(upper)) return false;
  // A function call is not a column.
  return !(i + 1 < toks.size() && toks[i + 1].kind == TokenKind::symbol && toks[i + 1].text == "(");
}

const ColumnMapping* lookup_column(const AnonymizationMap& map, const Token& t) {
  if (const auto* m = map.find(t.text)) return m;
  for (const auto& c : map.columns) {
    if (text::iequals(c.column, t.text)) return &c;
  }
  return nullptr;
}

// Start index of the literal including a unary minus, and whether the
// literal is negated.
struct LiteralSpan {
  std::size_t first;
  bool negative;
};

LiteralSpan literal_span(const std::vector<Token>& toks, std::size_t i) {
  if (toks[i].kind != TokenKind::string && i > 0 && toks[i - 1].kind == TokenKind::symbol &&
      toks[i - 1].text == "-") {
    if (i == 1) return {i - 1, true};
    const Token& before = toks[i - 2];
    const bool operand_before =
        is_literal(before) || before.kind == TokenKind::quoted_identifier ||
        (before.kind == TokenKind::identifier && !sql::is_keyword(before, "AND") &&
         !sql::is_keyword(before, "OR") && !sql::is_keyword(before, "NOT") && !sql::is_keyword(before, "IN") &&
         !sql::is_keyword(before, "BETWEEN") && !sql::is_keyword(before, "LIKE") &&
         !sql::is_keyword(before, "SELECT") && !sql::is_keyword(before, "WHERE") &&
         !sql::is_keyword(before, "HAVING")) ||
        (before.kind == TokenKind::symbol && before.text == ")");
    if (!operand_before) return {i - 1, true};
  }
  return {i, false};
}

// Column the literal at toks[first..i] is compared against, if any.
std::optional<std::size_t> context_column(const std::vector<Token>& toks, std::size_t first, std::size_t i) {
  auto column_before = [&](std::size_t k) -> std::optional<std::size_t> {
    // k is the index just past the expected column reference.
    if (k == 0) return std::nullopt;
    std::size_t c = k - 1;
    if (sql::is_keyword(toks[c], "NOT") && c > 0) --c;
    if (is_column_ref(toks, c)) return c;
    return std::nullopt;
  };

  if (first > 0) {
    const Token& p = toks[first - 1];
    if (is_comparison(p) || sql::is_keyword(p, "LIKE")) {
      if (auto c = column_before(first - 1)) return c;
    } else if (sql::is_keyword(p, "BETWEEN")) {
      if (auto c = column_before(first - 1)) return c;
    } else if (sql::is_keyword(p, "AND") && first >= 3) {
      // col BETWEEN lit AND <literal>
      std::size_t k = first - 2;
      if (is_literal(toks[k])) {
        std::size_t lf = literal_span(toks, k).first;
        if (lf > 0 && sql::is_keyword(toks[lf - 1], "BETWEEN")) {
          if (auto c = column_before(lf - 1)) return c;
        }
      }
    } else if (p.kind == TokenKind::symbol && (p.text == "(" || p.text == ",")) {
      // col [NOT] IN (lit, lit, <literal>
      std::size_t k = first - 1;
      while (k > 0 && toks[k].kind == TokenKind::symbol && toks[k].text == ",") {
        if (k < 1 || !is_literal(toks[k - 1])) return std::nullopt;
        k = literal_span(toks, k - 1).first;
        if (k == 0) return std::nullopt;
        --k;
      }
      if (toks[k].kind == TokenKind::symbol && toks[k].text == "(" && k > 0 && sql::is_keyword(toks[k - 1], "IN")) {
        if (auto c = column_before(k - 1)) return c;
      }
    }
  }
  // <literal> op col
  if (i + 2 < toks.size() && is_comparison(toks[i + 1]) && is_column_ref(toks, i + 2)) {
    std::size_t c = i + 2;
    if (c + 2 < toks.size() && toks[c + 1].kind == TokenKind::symbol && toks[c + 1].text == "." &&
        (toks[c + 2].kind == TokenKind::identifier || toks[c + 2].kind == TokenKind::quoted_identifier)) {
      c += 2;
    }
    return c;
  }
  return std::nullopt;
}

// Original value for an anonymized literal within one column mapping.
std::optional<std::string> reverse_value(const ColumnMapping& m, const std::string& literal) {
  if (m.data_class == DataClass::continuous) return std::nullopt;
  std::string key = literal;
  if (m.data_class == DataClass::discrete) {
    auto v = text::parse_int(literal);
    if (!v) {
      // 12.0 compares equal to 12.
      auto r = text::parse_real(literal);
      if (!r || *r != std::trunc(*r) || std::fabs(*r) > 9e15) return std::nullopt;
      v = static_cast<std::int64_t>(*r);
    }
    key = std::to_string(*v);
  }
  auto it = m.reverse.find(key);
  if (it == m.reverse.end()) return std::nullopt;
  return it->second;
}

std::string quote_string(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

}  // namespace

std::string deanonymize_literals(std::string_view sql_text, const AnonymizationMap& map) {
  std::vector<Token> toks;
  try {
    toks = sql::tokenize(sql_text);
  } catch (const sql::SqlError&) {
    return std::string(sql_text);  // the parser reports the error later
  }

  struct Replacement {
    std::size_t begin, end;
    std::string text;
  };
  std::vector<Replacement> replacements;

  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!is_literal(toks[i])) continue;
    const auto span = literal_span(toks, i);
    const std::string literal = (span.negative ? "-" : "") + toks[i].text;

    std::optional<std::string> original;
    const ColumnMapping* target = nullptr;
    if (auto c = context_column(toks, span.first, i)) {
      // Qualified reference t.col: the column is the last part.
      std::size_t k = *c;
      if (k + 2 < toks.size() && toks[k + 1].kind == TokenKind::symbol && toks[k + 1].text == ".") k += 2;
      target = lookup_column(map, toks[k]);
      if (target) original = reverse_value(*target, literal);
    } else if (toks[i].kind == TokenKind::string) {
      // Bare numbers (LIMIT 5, x * 2) are never rewritten without a column.
      bool conflict = false;
      for (const auto& m : map.columns) {
        auto o = reverse_value(m, literal);
        if (!o) continue;
        if (original && (*original != *o || target->data_class != m.data_class)) conflict = true;
        original = o;
        target = &m;
      }
      if (conflict) original.reset();
    }
    if (!original) continue;

    std::string text;
    if (toks[i].kind == TokenKind::string) {
      text = quote_string(*original);
    } else if (target->data_class == DataClass::discrete || text::parse_real(*original)) {
      text = *original;
    } else {
      text = quote_string(*original);
    }
    replacements.push_back({toks[span.first].offset, toks[i].offset + toks[i].length, std::move(text)});
  }

  std::string out;
  std::size_t pos = 0;
  for (const auto& r : replacements) {
    out.append(sql_text.substr(pos, r.begin - pos));
    out.append(r.text);
    pos = r.end;
  }
  out.append(sql_text.substr(pos));
  return out;
}

// ---- JSON ----

nlohmann::json to_json(const AnonymizationMap& map) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : map.columns) {
    nlohmann::json j = {{"column", c.column}, {"class", std::string(ingest::to_string(c.data_class))}};
    if (c.data_class == DataClass::continuous) {
      nlohmann::json cells = nlohmann::json::array();
      for (const auto& cell : c.cells) cells.push_back(cell ? nlohmann::json(*cell) : nlohmann::json());
      j["cells"] = std::move(cells);
    } else {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& [from, to] : c.forward) pairs.push_back({from, to});
      j["forward"] = std::move(pairs);
    }
    cols.push_back(std::move(j));
  }
  return {{"seed", map.seed}, {"columns", std::move(cols)}};
}

AnonymizationMap map_from_json(const nlohmann::json& doc) {
  try {
    AnonymizationMap map;
    map.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& j : doc.at("columns")) {
      ColumnMapping c;
      c.column = j.at("column").get<std::string>();
      auto cls = ingest::parse_data_class(j.at("class").get<std::string>());
      if (!cls) throw Error(ErrorKind::validation, "unknown data class in anonymization map");
      c.data_class = *cls;
      if (c.data_class == DataClass::continuous) {
        for (const auto& cell : j.at("cells")) {
          c.cells.push_back(cell.is_null() ? Cell{} : Cell{cell.get<std::string>()});
        }
      } else {
        for (const auto& pair : j.at("forward")) {
          add_pair(c, pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
        }
        if (c.reverse.size() != c.forward.size()) {
          throw Error(ErrorKind::validation, fmt::format("mapping for '{}' is not a bijection", c.column));
        }
      }
      map.columns.push_back(std::move(c));
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed anonymization map: ") + e.what());
  }
}

}  // namespace factflow::anon
