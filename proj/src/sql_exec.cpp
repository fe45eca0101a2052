#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include <fmt/format.h>

#include "factflow/sql.hpp"
#include "factflow/text.hpp"

namespace factflow::sql {

SqlType Value::type() const {
  switch (data.index()) {
    case 1: return SqlType::integer;
    case 2: return SqlType::real;
    case 3: return SqlType::text;
    default: return SqlType::null;
  }
}

double Value::as_real() const {
  if (data.index() == 1) return static_cast<double>(std::get<std::int64_t>(data));
  return std::get<double>(data);
}

int compare_values(const Value& a, const Value& b) {
  auto rank = [](const Value& v) { return v.is_null() ? 0 : v.is_numeric() ? 1 : 2; };
  const int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra == 0) return 0;
  if (ra == 2) {
    const int c = a.as_text().compare(b.as_text());
    return c < 0 ? -1 : c > 0 ? 1 : 0;
  }
  if (a.type() == SqlType::integer && b.type() == SqlType::integer) {
    return a.as_int() < b.as_int() ? -1 : a.as_int() > b.as_int() ? 1 : 0;
  }
  const double x = a.as_real(), y = b.as_real();
  return x < y ? -1 : x > y ? 1 : 0;
}

std::string display_value(const Value& v) {
  switch (v.type()) {
    case SqlType::null: return "NULL";
    case SqlType::integer: return std::to_string(v.as_int());
    case SqlType::real: return text::format_display(v.as_real());
    case SqlType::text: return v.as_text();
  }
  return "NULL";
}

nlohmann::json value_to_json(const Value& v) {
  switch (v.type()) {
    case SqlType::null: return nullptr;
    case SqlType::integer: return v.as_int();
    case SqlType::real: return v.as_real();
    case SqlType::text: return v.as_text();
  }
  return nullptr;
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_number()) return Value::real(j.get<double>());
  if (j.is_string()) return Value::text(j.get<std::string>());
  throw Error(ErrorKind::validation, "result cell must be null, a number or a string");
}

std::optional<std::size_t> ResultTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::iequals(columns[i].name, name)) return i;
  }
  return std::nullopt;
}

nlohmann::json result_to_json(const ResultTable& rt) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : rt.columns) cols.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rt.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& v : r) row.push_back(value_to_json(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", cols}, {"rows", rows}};
}

ResultTable result_from_json(const nlohmann::json& j) {
  try {
    ResultTable rt;
    for (const auto& c : j.at("columns")) {
      const auto t = c.at("type").get<std::string>();
      SqlType type = SqlType::null;
      if (t == "INTEGER") type = SqlType::integer;
      else if (t == "REAL") type = SqlType::real;
      else if (t == "TEXT") type = SqlType::text;
      rt.columns.push_back({c.at("name").get<std::string>(), type});
    }
    for (const auto& r : j.at("rows")) {
      std::vector<Value> row;
      for (const auto& v : r) row.push_back(value_from_json(v));
      if (row.size() != rt.columns.size()) throw Error(ErrorKind::validation, "result row width mismatch");
      rt.rows.push_back(std::move(row));
    }
    return rt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed result table: ") + e.what());
  }
}

namespace {

bool truthy(const Value& v) { return v.is_numeric() && v.as_real() != 0; }

Value boolean(bool b) { return Value::integer(b ? 1 : 0); }

// Number to text the way SQLite renders it for LIKE.
std::string number_text(const Value& v) {
  if (v.type() == SqlType::integer) return std::to_string(v.as_int());
  std::string s = fmt::format("{:.15g}", v.as_real());
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

bool like_match(std::string_view s, std::string_view p) {
  std::size_t si = 0, pi = 0, star_p = std::string_view::npos, star_s = 0;
  while (si < s.size()) {
    if (pi < p.size() && (p[pi] == '_' || (p[pi] != '%' && p[pi] == s[si]))) {
      ++si;
      ++pi;
    } else if (pi < p.size() && p[pi] == '%') {
      star_p = pi++;
      star_s = si;
    } else if (star_p != std::string_view::npos) {
      pi = star_p + 1;
      si = ++star_s;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi] == '%') ++pi;
  return pi == p.size();
}

// Mirrors SQLite's ROUND: printf("%.*f") with a long double accumulator,
// a magnitude-scaled rounder and at most 16 significant digits.
double sqlite_round(double r, std::int64_t digits) {
  if (digits < 0) digits = 0;
  if (digits > 30) digits = 30;
  if (r < -4503599627370496.0 || r > 4503599627370496.0) return r;
  if (digits == 0) return static_cast<double>(static_cast<std::int64_t>(r + (r < 0 ? -0.5 : 0.5)));
  static constexpr double kRound[] = {5.0e-01, 5.0e-02, 5.0e-03, 5.0e-04, 5.0e-05,
                                      5.0e-06, 5.0e-07, 5.0e-08, 5.0e-09, 5.0e-10};
  const int precision = static_cast<int>(digits);
  double rounder = kRound[precision % 10];
  for (int i = precision; i >= 10; i -= 10) rounder *= 1.0e-10;
  long double v = std::fabs(static_cast<long double>(r));
  const int bin_exp = r == 0.0 ? -1023 : std::ilogb(r);
  if (precision + bin_exp / 3 < 15) rounder += static_cast<double>(v) * 3e-16;
  v += rounder;

  int exp10 = 0;
  if (v > 0) {
    long double scale = 1.0L;
    while (v >= 10.0L * scale) {
      scale *= 10.0L;
      ++exp10;
    }
    v /= scale;
    while (v < 1.0L) {
      v *= 10.0L;
      --exp10;
    }
  }
  int significant = 16;
  auto next_digit = [&]() -> char {
    if (significant <= 0) return '0';
    --significant;
    const int d = static_cast<int>(v);
    v = (v - d) * 10.0L;
    return static_cast<char>('0' + d);
  };
  std::string s;
  if (exp10 < 0) {
    s = "0.";
    for (int i = 0; i < precision; ++i) s += i < -exp10 - 1 ? '0' : next_digit();
  } else {
    for (int i = 0; i <= exp10; ++i) s += next_digit();
    s += '.';
    for (int i = 0; i < precision; ++i) s += next_digit();
  }
  const double out = std::strtod(s.c_str(), nullptr);
  return r < 0 ? -out : out;
}

class Executor {
 public:
  Executor(const SqlQuery& q, const ingest::Dataset& ds) : q_(q), schema_(schema_of(ds)) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      index_[ds.columns[c].name] = c;
      std::vector<Value> col;
      col.reserve(ds.row_count);
      const SqlType t = schema_.columns[c].type;
      for (const auto& cell : ds.columns[c].cells) {
        if (!cell) {
          col.emplace_back();
        } else if (t == SqlType::integer) {
          auto v = text::parse_int(*cell);
          col.push_back(v ? Value::integer(*v) : Value::text(*cell));
        } else if (t == SqlType::real) {
          auto v = text::parse_real(*cell);
          col.push_back(v ? Value::real(*v) : Value::text(*cell));
        } else {
          col.push_back(Value::text(*cell));
        }
      }
      columns_.push_back(std::move(col));
    }
    row_count_ = ds.row_count;
  }

  ResultTable run() {
    if (!text::iequals(q_.table, schema_.table)) {
      throw SqlError(SqlErrorKind::unknown_table,
                     fmt::format("unknown table \"{}\"; the only table is \"{}\"", q_.table, schema_.table));
    }
    ResultTable out;
    for (const auto& item : q_.items) {
      out.columns.push_back({item.display.empty() ? to_sql(item.expr) : item.display, type_of(item.expr)});
    }
    if (q_.where) require_not_text(*q_.where, "WHERE");
    if (q_.having) require_not_text(*q_.having, "HAVING");
    for (const auto& g : q_.group_by) type_of(g);
    for (const auto& o : q_.order_by) type_of(o.expr);

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < row_count_; ++r) {
      if (!q_.where || truthy(eval(*q_.where, {r, nullptr}))) rows.push_back(r);
    }

    struct Unit {
      std::vector<Value> values;
      std::vector<Value> keys;
    };
    std::vector<Unit> units;
    auto emit = [&](const Ctx& ctx) {
      Unit u;
      for (const auto& item : q_.items) u.values.push_back(eval(item.expr, ctx));
      for (const auto& o : q_.order_by) u.keys.push_back(eval(o.expr, ctx));
      units.push_back(std::move(u));
    };

    if (q_.aggregated()) {
      std::vector<std::vector<std::size_t>> groups;
      if (q_.group_by.empty()) {
        groups.push_back(rows);
      } else {
        std::map<std::vector<Value>, std::size_t, KeyLess> by_key;
        for (auto r : rows) {
          std::vector<Value> key;
          for (const auto& g : q_.group_by) key.push_back(eval(g, {r, nullptr}));
          auto [it, inserted] = by_key.emplace(std::move(key), groups.size());
          if (inserted) groups.emplace_back();
          groups[it->second].push_back(r);
        }
        std::vector<std::vector<std::size_t>> ordered;
        for (const auto& [key, idx] : by_key) ordered.push_back(std::move(groups[idx]));
        groups = std::move(ordered);
      }
      for (const auto& g : groups) {
        const Ctx ctx{g.empty() ? kNoRow : g.front(), &g};
        if (q_.having && !truthy(eval(*q_.having, ctx))) continue;
        emit(ctx);
      }
    } else {
      for (auto r : rows) emit({r, nullptr});
    }

    if (q_.distinct) {
      std::map<std::vector<Value>, bool, KeyLess> seen;
      std::vector<Unit> kept;
      for (auto& u : units) {
        if (seen.emplace(u.values, true).second) kept.push_back(std::move(u));
      }
      units = std::move(kept);
    }

    if (!q_.order_by.empty()) {
      std::stable_sort(units.begin(), units.end(), [&](const Unit& a, const Unit& b) {
        for (std::size_t k = 0; k < q_.order_by.size(); ++k) {
          int c = compare_values(a.keys[k], b.keys[k]);
          if (q_.order_by[k].descending) c = -c;
          if (c != 0) return c < 0;
        }
        return false;
      });
    }

    std::size_t begin = 0;
    if (q_.offset && *q_.offset > 0) begin = static_cast<std::size_t>(*q_.offset);
    std::size_t end = units.size();
    if (q_.limit && *q_.limit >= 0) end = std::min(end, begin + static_cast<std::size_t>(*q_.limit));
    for (std::size_t i = begin; i < end; ++i) out.rows.push_back(std::move(units[i].values));
    return out;
  }

 private:
  static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

  struct Ctx {
    std::size_t row;
    const std::vector<std::size_t>* group;
  };

  struct KeyLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
      for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        const int c = compare_values(a[i], b[i]);
        if (c != 0) return c < 0;
      }
      return a.size() < b.size();
    }
  };

  const SqlQuery& q_;
  Schema schema_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<Value>> columns_;
  std::size_t row_count_ = 0;

  [[noreturn]] void mismatch(const Expr& e, const std::string& what) const {
    throw SqlError(SqlErrorKind::type_mismatch,
                   fmt::format("type mismatch at offset {}: {} in {}", e.offset, what, to_sql(e)), e.offset);
  }

  void require_not_text(const Expr& e, std::string_view clause) const {
    if (type_of(e) == SqlType::text) mismatch(e, fmt::format("{} condition is TEXT, not a boolean", clause));
  }

  void check_comparable(const Expr& e, SqlType a, SqlType b) const {
    if (a == SqlType::null || b == SqlType::null) return;
    if ((a == SqlType::text) != (b == SqlType::text)) {
      mismatch(e, fmt::format("cannot compare {} with {}", to_string(a), to_string(b)));
    }
  }

  SqlType numeric_operand(const Expr& e, const Expr& operand) const {
    const SqlType t = type_of(operand);
    if (t == SqlType::text) {
      mismatch(e, fmt::format("'{}' needs a numeric operand but {} is TEXT", e.name, to_sql(operand)));
    }
    return t;
  }

  SqlType type_of(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::column: {
        auto it = index_.find(e.name);
        if (it == index_.end()) {
          throw SqlError(SqlErrorKind::unknown_column, fmt::format("unknown column \"{}\"", e.name), e.offset);
        }
        return schema_.columns[it->second].type;
      }
      case ExprKind::literal: return e.literal.type();
      case ExprKind::unary: {
        const SqlType t = numeric_operand(e, e.args[0]);
        return e.name == "NOT" ? SqlType::integer : t;
      }
      case ExprKind::binary: {
        if (e.name == "AND" || e.name == "OR") {
          numeric_operand(e, e.args[0]);
          numeric_operand(e, e.args[1]);
          return SqlType::integer;
        }
        if (e.name == "+" || e.name == "-" || e.name == "*" || e.name == "/") {
          const SqlType a = numeric_operand(e, e.args[0]);
          const SqlType b = numeric_operand(e, e.args[1]);
          if (a == SqlType::null || b == SqlType::null) return SqlType::null;
          return a == SqlType::real || b == SqlType::real ? SqlType::real : SqlType::integer;
        }
        check_comparable(e, type_of(e.args[0]), type_of(e.args[1]));
        return SqlType::integer;
      }
      case ExprKind::count_star: return SqlType::integer;
      case ExprKind::function: {
        if (e.name == "COUNT") {
          type_of(e.args[0]);
          return SqlType::integer;
        }
        if (e.name == "MIN" || e.name == "MAX") return type_of(e.args[0]);
        const SqlType t = numeric_operand(e, e.args[0]);
        if (e.name == "AVG") return SqlType::real;
        if (e.name == "SUM") return t == SqlType::real ? SqlType::real : SqlType::integer;
        if (e.name == "ROUND") {
          if (e.args.size() > 1) numeric_operand(e, e.args[1]);
          return SqlType::real;
        }
        return t;  // ABS
      }
      case ExprKind::in_list: {
        const SqlType subject = type_of(e.args[0]);
        for (std::size_t i = 1; i < e.args.size(); ++i) check_comparable(e, subject, type_of(e.args[i]));
        return SqlType::integer;
      }
      case ExprKind::between: {
        const SqlType subject = type_of(e.args[0]);
        check_comparable(e, subject, type_of(e.args[1]));
        check_comparable(e, subject, type_of(e.args[2]));
        return SqlType::integer;
      }
      case ExprKind::like:
        type_of(e.args[0]);
        type_of(e.args[1]);
        return SqlType::integer;
      case ExprKind::is_null:
        type_of(e.args[0]);
        return SqlType::integer;
    }
    return SqlType::null;
  }

  Value eval(const Expr& e, const Ctx& ctx) const {
    switch (e.kind) {
      case ExprKind::column:
        if (ctx.row == kNoRow) return {};
        return columns_[index_.at(e.name)][ctx.row];
      case ExprKind::literal: return e.literal;
      case ExprKind::unary: {
        const Value v = eval(e.args[0], ctx);
        if (v.is_null()) return {};
        if (e.name == "NOT") return boolean(!truthy(v));
        if (v.type() == SqlType::integer && v.as_int() != INT64_MIN) return Value::integer(-v.as_int());
        return Value::real(-v.as_real());
      }
      case ExprKind::binary: return eval_binary(e, ctx);
      case ExprKind::count_star:
      case ExprKind::function:
        if (is_aggregate(e)) return eval_aggregate(e, ctx);
        return eval_scalar(e, ctx);
      case ExprKind::in_list: {
        const Value x = eval(e.args[0], ctx);
        if (x.is_null()) return {};
        bool saw_null = false;
        for (std::size_t i = 1; i < e.args.size(); ++i) {
          const Value v = eval(e.args[i], ctx);
          if (v.is_null()) {
            saw_null = true;
          } else if (compare_values(x, v) == 0) {
            return boolean(!e.negated);
          }
        }
        if (saw_null) return {};
        return boolean(e.negated);
      }
      case ExprKind::between: {
        const Value x = eval(e.args[0], ctx);
        const Value lo = eval(e.args[1], ctx);
        const Value hi = eval(e.args[2], ctx);
        const Value ge = x.is_null() || lo.is_null() ? Value{} : boolean(compare_values(x, lo) >= 0);
        const Value le = x.is_null() || hi.is_null() ? Value{} : boolean(compare_values(x, hi) <= 0);
        Value both;
        if ((!ge.is_null() && !truthy(ge)) || (!le.is_null() && !truthy(le))) {
          both = boolean(false);
        } else if (ge.is_null() || le.is_null()) {
          return {};
        } else {
          both = boolean(true);
        }
        return e.negated ? boolean(!truthy(both)) : both;
      }
      case ExprKind::like: {
        const Value s = eval(e.args[0], ctx);
        const Value p = eval(e.args[1], ctx);
        if (s.is_null() || p.is_null()) return {};
        const std::string st = s.type() == SqlType::text ? s.as_text() : number_text(s);
        const std::string pt = p.type() == SqlType::text ? p.as_text() : number_text(p);
        return boolean(like_match(st, pt) != e.negated);
      }
      case ExprKind::is_null: return boolean(eval(e.args[0], ctx).is_null() != e.negated);
    }
    return {};
  }

  Value eval_binary(const Expr& e, const Ctx& ctx) const {
    if (e.name == "AND" || e.name == "OR") {
      const Value a = eval(e.args[0], ctx);
      const Value b = eval(e.args[1], ctx);
      const bool is_and = e.name == "AND";
      const bool decisive = !is_and;  // value that settles the result
      if ((!a.is_null() && truthy(a) == decisive) || (!b.is_null() && truthy(b) == decisive)) return boolean(decisive);
      if (a.is_null() || b.is_null()) return {};
      return boolean(!decisive);
    }
    const Value a = eval(e.args[0], ctx);
    const Value b = eval(e.args[1], ctx);
    if (a.is_null() || b.is_null()) return {};
    const std::string& op = e.name;
    if (op == "=") return boolean(compare_values(a, b) == 0);
    if (op == "<>") return boolean(compare_values(a, b) != 0);
    if (op == "<") return boolean(compare_values(a, b) < 0);
    if (op == "<=") return boolean(compare_values(a, b) <= 0);
    if (op == ">") return boolean(compare_values(a, b) > 0);
    if (op == ">=") return boolean(compare_values(a, b) >= 0);

    if (a.type() == SqlType::integer && b.type() == SqlType::integer) {
      const std::int64_t x = a.as_int(), y = b.as_int();
      std::int64_t r = 0;
      if (op == "+" && !__builtin_add_overflow(x, y, &r)) return Value::integer(r);
      if (op == "-" && !__builtin_sub_overflow(x, y, &r)) return Value::integer(r);
      if (op == "*" && !__builtin_mul_overflow(x, y, &r)) return Value::integer(r);
      if (op == "/") {
        if (y == 0) return {};
        if (!(x == INT64_MIN && y == -1)) return Value::integer(x / y);
      }
    }
    const double x = a.as_real(), y = b.as_real();
    if (op == "+") return Value::real(x + y);
    if (op == "-") return Value::real(x - y);
    if (op == "*") return Value::real(x * y);
    if (y == 0) return {};
    return Value::real(x / y);
  }

  Value eval_scalar(const Expr& e, const Ctx& ctx) const {
    const Value v = eval(e.args[0], ctx);
    if (v.is_null()) return {};
    if (e.name == "ABS") {
      if (v.type() == SqlType::integer) {
        if (v.as_int() == INT64_MIN) throw SqlError(SqlErrorKind::runtime, "integer overflow in ABS", e.offset);
        return Value::integer(std::llabs(v.as_int()));
      }
      return Value::real(std::fabs(v.as_real()));
    }
    // ROUND
    std::int64_t digits = 0;
    if (e.args.size() > 1) {
      const Value d = eval(e.args[1], ctx);
      if (d.is_null()) return {};
      digits = d.type() == SqlType::integer ? d.as_int() : static_cast<std::int64_t>(d.as_real());
    }
    return Value::real(sqlite_round(v.as_real(), digits));
  }

  Value eval_aggregate(const Expr& e, const Ctx& ctx) const {
    if (!ctx.group) {
      throw SqlError(SqlErrorKind::invalid, fmt::format("misuse of aggregate {}", to_sql(e)), e.offset);
    }
    if (e.kind == ExprKind::count_star) return Value::integer(static_cast<std::int64_t>(ctx.group->size()));

    std::vector<Value> values;
    for (auto r : *ctx.group) {
      Value v = eval(e.args[0], {r, nullptr});
      if (!v.is_null()) values.push_back(std::move(v));
    }
    if (e.distinct) {
      std::vector<Value> unique;
      std::map<std::vector<Value>, bool, KeyLess> seen;
      for (auto& v : values) {
        if (seen.emplace(std::vector<Value>{v}, true).second) unique.push_back(std::move(v));
      }
      values = std::move(unique);
    }

    if (e.name == "COUNT") return Value::integer(static_cast<std::int64_t>(values.size()));
    if (e.name == "MIN" || e.name == "MAX") {
      if (values.empty()) return {};
      const Value* best = &values.front();
      for (const auto& v : values) {
        const int c = compare_values(v, *best);
        if ((e.name == "MIN" && c < 0) || (e.name == "MAX" && c > 0)) best = &v;
      }
      return *best;
    }
    // SUM / AVG: integers accumulate exactly while a float sum runs alongside.
    if (values.empty()) return {};
    std::int64_t isum = 0;
    double rsum = 0;
    bool approx = false, overflow = false;
    for (const auto& v : values) {
      if (v.type() == SqlType::integer) {
        rsum += static_cast<double>(v.as_int());
        if (!approx && !overflow && __builtin_add_overflow(isum, v.as_int(), &isum)) overflow = approx = true;
      } else {
        rsum += v.as_real();
        approx = true;
      }
    }
    if (e.name == "AVG") return Value::real(rsum / static_cast<double>(values.size()));
    if (overflow) throw SqlError(SqlErrorKind::runtime, fmt::format("integer overflow in {}", to_sql(e)), e.offset);
    return approx ? Value::real(rsum) : Value::integer(isum);
  }
};

}  // namespace

ResultTable execute(const SqlQuery& q, const ingest::Dataset& ds) {
  Executor ex(q, ds);
  return ex.run();
}

ResultTable run(std::string_view sql_text, const ingest::Dataset& ds) {
  return execute(parse(sql_text, schema_of(ds)), ds);
}

std::string describe_result(const ResultTable& rt, std::size_t max_rows) {
  std::vector<std::string> cols;
  std::vector<std::string> names;
  for (const auto& c : rt.columns) {
    cols.push_back(fmt::format("\"{}\" {}", c.name, to_string(c.type)));
    names.push_back(c.name);
  }
  std::string out = "columns: " + text::join(cols, ", ") + "\n";
  out += fmt::format("{} {}", rt.row_count(), rt.row_count() == 1 ? "row" : "rows");
  if (rt.rows.empty()) return out;
  const std::size_t shown = std::min(max_rows, rt.row_count());
  if (shown > 0) out += "\n" + text::join(names, ",");
  for (std::size_t i = 0; i < shown; ++i) {
    std::vector<std::string> cells;
    for (const auto& v : rt.rows[i]) cells.push_back(display_value(v));
    out += "\n" + text::join(cells, ",");
  }
  if (shown < rt.row_count()) out += fmt::format("\n… {} more", rt.row_count() - shown);
  return out;
}

}  // namespace factflow::sql
