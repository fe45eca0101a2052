#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "factflow/ingest.hpp"
#include "factflow/sql_lexer.hpp"
#include "json.hpp"

namespace factflow::sql {

enum class SqlType { null, integer, real, text };

std::string_view to_string(SqlType t);  // NULL / INTEGER / REAL / TEXT

struct Value {
  std::variant<std::monostate, std::int64_t, double, std::string> data;

  Value() = default;
  static Value integer(std::int64_t v) { return Value{v}; }
  static Value real(double v) { return Value{v}; }
  static Value text(std::string v) { return Value{std::move(v)}; }

  SqlType type() const;
  bool is_null() const { return data.index() == 0; }
  bool is_numeric() const { return data.index() == 1 || data.index() == 2; }
  std::int64_t as_int() const { return std::get<std::int64_t>(data); }
  double as_real() const;  // integer or real
  const std::string& as_text() const { return std::get<std::string>(data); }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  template <typename T>
  explicit Value(T v) : data(std::move(v)) {}
};

// Total order used for ORDER BY, GROUP BY and DISTINCT: NULL < numbers <
// text; numbers compare by value, text bytewise.
int compare_values(const Value& a, const Value& b);

// Short form for prompts and statements.
std::string display_value(const Value& v);

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

enum class ExprKind { column, literal, unary, binary, function, count_star, in_list, between, like, is_null };

struct Expr {
  ExprKind kind = ExprKind::literal;
  // column: schema column name; unary/binary: operator ("-", "NOT", "=",
  // "<>", "AND", ...); function: upper-case function name.
  std::string name;
  Value literal;
  std::vector<Expr> args;
  bool distinct = false;  // aggregate DISTINCT
  bool negated = false;   // NOT IN, NOT BETWEEN, NOT LIKE, IS NOT NULL
  std::size_t offset = 0;  // source position, ignored by ==

  friend bool operator==(const Expr& a, const Expr& b) {
    return a.kind == b.kind && a.name == b.name && a.literal == b.literal && a.args == b.args &&
           a.distinct == b.distinct && a.negated == b.negated;
  }
};

bool is_aggregate(const Expr& e);
bool contains_aggregate(const Expr& e);

struct SelectItem {
  Expr expr;
  std::string alias;
  std::string display;  // result column name; ignored by ==

  friend bool operator==(const SelectItem& a, const SelectItem& b) {
    return a.expr == b.expr && a.alias == b.alias;
  }
};

struct OrderItem {
  Expr expr;
  bool descending = false;
  friend bool operator==(const OrderItem&, const OrderItem&) = default;
};

// Parsed and resolved query. `*`, positional ORDER BY / GROUP BY terms and
// alias references are already replaced by the expressions they stand for.
struct SqlQuery {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::string table;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
  std::optional<std::int64_t> offset;

  bool aggregated() const;
  friend bool operator==(const SqlQuery&, const SqlQuery&) = default;
};

struct SchemaColumn {
  std::string name;
  SqlType type = SqlType::text;
};

struct Schema {
  std::string table;
  std::vector<SchemaColumn> columns;
  const SchemaColumn* find(std::string_view name) const;  // case-insensitive
};

Schema schema_of(const ingest::Dataset& ds);

SqlQuery parse(std::string_view sql_text, const Schema& schema);

// Canonical, fully parenthesized SQL. parse(to_sql(q)) == q.
std::string to_sql(const SqlQuery& q);
std::string to_sql(const Expr& e);

struct ResultColumn {
  std::string name;
  SqlType type = SqlType::null;
  friend bool operator==(const ResultColumn&, const ResultColumn&) = default;
};

struct ResultTable {
  std::vector<ResultColumn> columns;
  std::vector<std::vector<Value>> rows;

  std::size_t row_count() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

nlohmann::json result_to_json(const ResultTable& rt);
ResultTable result_from_json(const nlohmann::json& j);

ResultTable execute(const SqlQuery& q, const ingest::Dataset& ds);

// parse + execute against the dataset's own schema.
ResultTable run(std::string_view sql_text, const ingest::Dataset& ds);

// Column names and types, row count, then up to max_rows rows as CSV.
std::string describe_result(const ResultTable& rt, std::size_t max_rows);

}  // namespace factflow::sql
