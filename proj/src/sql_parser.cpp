#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "factflow/sql.hpp"
#include "factflow/text.hpp"

namespace factflow::sql {

std::string_view to_string(SqlType t) {
  switch (t) {
    case SqlType::null: return "NULL";
    case SqlType::integer: return "INTEGER";
    case SqlType::real: return "REAL";
    case SqlType::text: return "TEXT";
  }
  return "NULL";
}

const SchemaColumn* Schema::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  for (const auto& c : columns) {
    if (text::iequals(c.name, name)) return &c;
  }
  return nullptr;
}

Schema schema_of(const ingest::Dataset& ds) {
  Schema s{.table = ds.name, .columns = {}};
  for (const auto& c : ds.columns) {
    SqlType t = SqlType::text;
    if (c.data_class == ingest::DataClass::discrete) t = SqlType::integer;
    if (c.data_class == ingest::DataClass::continuous) t = SqlType::real;
    s.columns.push_back({c.name, t});
  }
  return s;
}

bool is_aggregate(const Expr& e) {
  if (e.kind == ExprKind::count_star) return true;
  if (e.kind != ExprKind::function) return false;
  return e.name == "COUNT" || e.name == "SUM" || e.name == "AVG" || e.name == "MIN" || e.name == "MAX";
}

bool contains_aggregate(const Expr& e) {
  if (is_aggregate(e)) return true;
  return std::any_of(e.args.begin(), e.args.end(), [](const Expr& a) { return contains_aggregate(a); });
}

bool SqlQuery::aggregated() const {
  if (!group_by.empty() || having) return true;
  for (const auto& i : items) {
    if (contains_aggregate(i.expr)) return true;
  }
  for (const auto& o : order_by) {
    if (contains_aggregate(o.expr)) return true;
  }
  return false;
}

namespace {

const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = {
      "SELECT", "FROM",   "WHERE",  "GROUP",     "BY",     "HAVING", "ORDER",   "LIMIT",  "OFFSET", "AS",
      "AND",    "OR",     "NOT",    "IN",        "BETWEEN", "LIKE",  "IS",      "NULL",   "ASC",    "DESC",
      "DISTINCT", "ALL",  "JOIN",   "INNER",     "LEFT",   "RIGHT",  "FULL",    "CROSS",  "NATURAL", "OUTER",
      "ON",     "USING",  "UNION",  "INTERSECT", "EXCEPT", "WITH",   "CASE",    "WHEN",   "THEN",   "ELSE",
      "END",    "OVER",   "EXISTS", "CAST",      "TRUE",   "FALSE",  "INSERT",  "UPDATE", "DELETE", "CREATE",
      "DROP",   "ALTER",  "ESCAPE", "COLLATE",   "WINDOW", "PARTITION", "INTO", "VALUES", "SET",    "REPLACE",
      "GLOB",   "REGEXP", "MATCH"};
  return words;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string describe_token(const Token& t) {
  switch (t.kind) {
    case TokenKind::end: return "end of input";
    case TokenKind::string: return "'" + t.text + "'";
    case TokenKind::quoted_identifier: return "\"" + t.text + "\"";
    default: return "\"" + t.text + "\"";
  }
}

class Parser {
 public:
  Parser(std::string_view sql, const Schema& schema) : sql_(sql), schema_(schema), toks_(tokenize(sql)) {}

  SqlQuery parse_query() {
    reject_leading_statement();
    SqlQuery q;
    expect_keyword("SELECT", "a query must start with SELECT");
    if (accept_keyword("DISTINCT")) {
      q.distinct = true;
    } else {
      accept_keyword("ALL");
    }

    // Select items are parsed after FROM is known, so remember their tokens.
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::vector<std::string> aliases;
    std::vector<bool> stars;
    for (;;) {
      const std::size_t begin = pos_;
      if (is_symbol("*") || (peek().kind != TokenKind::end && peek(1).text == "." && peek(2).text == "*" &&
                             peek(2).kind == TokenKind::symbol)) {
        if (!is_symbol("*")) pos_ += 2;
        ++pos_;
        spans.push_back({begin, pos_});
        aliases.emplace_back();
        stars.push_back(true);
      } else {
        skip_expression();
        spans.push_back({begin, pos_});
        std::string alias;
        if (accept_keyword("AS")) {
          alias = expect_name("an alias after AS");
        } else if ((peek().kind == TokenKind::identifier && !is_reserved(peek())) ||
                   peek().kind == TokenKind::quoted_identifier) {
          alias = peek().text;
          ++pos_;
        } else if (peek().kind == TokenKind::string) {
          alias = peek().text;
          ++pos_;
        }
        aliases.push_back(alias);
        stars.push_back(false);
      }
      if (!accept_symbol(",")) break;
    }

    expect_keyword("FROM", "expected FROM after the select list");
    parse_from(q);

    // Now resolve select items against the table.
    const std::size_t after_from = pos_;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (stars[i]) {
        if (spans[i].second - spans[i].first == 3) check_qualifier(toks_[spans[i].first]);
        for (const auto& c : schema_.columns) {
          Expr e;
          e.kind = ExprKind::column;
          e.name = c.name;
          e.offset = toks_[spans[i].first].offset;
          q.items.push_back({e, "", c.name});
        }
        continue;
      }
      pos_ = spans[i].first;
      limit_ = spans[i].second;
      SelectItem item;
      item.expr = parse_expr(Scope::select);
      if (pos_ != spans[i].second) fail_syntax("expected ',' or FROM");
      item.alias = aliases[i];
      item.display = aliases[i].empty() ? display_text(spans[i].first, spans[i].second, item.expr) : aliases[i];
      q.items.push_back(std::move(item));
      limit_ = std::string::npos;
    }
    pos_ = after_from;
    items_ = &q.items;

    if (accept_keyword("WHERE")) {
      q.where = parse_expr(Scope::where);
      if (contains_aggregate(*q.where)) {
        throw SqlError(SqlErrorKind::invalid, "aggregate functions are not allowed in WHERE; use HAVING", q.where->offset);
      }
    }
    if (accept_keyword("GROUP")) {
      expect_keyword("BY", "expected BY after GROUP");
      do {
        q.group_by.push_back(parse_term(Scope::group));
        if (contains_aggregate(q.group_by.back())) {
          throw SqlError(SqlErrorKind::invalid, "aggregate functions are not allowed in GROUP BY",
                         q.group_by.back().offset);
        }
      } while (accept_symbol(","));
    }
    if (accept_keyword("HAVING")) {
      if (q.group_by.empty()) {
        throw SqlError(SqlErrorKind::invalid, "HAVING requires a GROUP BY clause", toks_[pos_ - 1].offset);
      }
      q.having = parse_expr(Scope::having);
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY", "expected BY after ORDER");
      do {
        OrderItem o;
        o.expr = parse_term(Scope::order);
        if (accept_keyword("DESC")) {
          o.descending = true;
        } else {
          accept_keyword("ASC");
        }
        if (is_keyword(peek(), "NULLS")) fail_unsupported("NULLS FIRST/LAST");
        q.order_by.push_back(std::move(o));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      auto first = parse_count("LIMIT");
      if (accept_symbol(",")) {
        q.offset = first;
        q.limit = parse_count("LIMIT");
      } else {
        q.limit = first;
        if (accept_keyword("OFFSET")) q.offset = parse_count("OFFSET");
      }
    }
    accept_symbol(";");
    if (peek().kind != TokenKind::end) {
      const Token& t = peek();
      for (const char* kw : {"UNION", "INTERSECT", "EXCEPT"}) {
        if (is_keyword(t, kw)) fail_unsupported(kw);
      }
      if (is_keyword(t, "WINDOW")) fail_unsupported("WINDOW");
      if (is_keyword(t, "SELECT")) fail_unsupported("multiple statements");
      fail_syntax("unexpected trailing input");
    }

    check_grouping(q);
    return q;
  }

 private:
  enum class Scope { select, where, group, having, order };

  std::string_view sql_;
  const Schema& schema_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t limit_ = std::string::npos;  // exclusive token bound while parsing a select item
  std::string table_alias_;
  const std::vector<SelectItem>* items_ = nullptr;

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    if (i >= toks_.size() || i >= limit_) {
      if (i >= limit_ && limit_ < toks_.size()) return end_at(limit_);
      return toks_.back();
    }
    return toks_[i];
  }
  const Token& end_at(std::size_t i) const {
    static thread_local Token t;
    t = Token{};
    t.offset = toks_[i].offset;
    return t;
  }

  bool is_reserved(const Token& t) const {
    return t.kind == TokenKind::identifier && reserved_words().count(upper(t.text)) > 0;
  }
  bool is_symbol(std::string_view s) const { return peek().kind == TokenKind::symbol && peek().text == s; }
  bool accept_symbol(std::string_view s) {
    if (!is_symbol(s)) return false;
    ++pos_;
    return true;
  }
  bool accept_keyword(std::string_view kw) {
    if (!is_keyword(peek(), kw)) return false;
    ++pos_;
    return true;
  }
  void expect_symbol(std::string_view s, std::string_view what) {
    if (!accept_symbol(s)) fail_syntax(std::string(what));
  }
  void expect_keyword(std::string_view kw, std::string_view what) {
    if (!accept_keyword(kw)) fail_syntax(std::string(what));
  }
  std::string expect_name(std::string_view what) {
    const Token& t = peek();
    if (t.kind == TokenKind::quoted_identifier || (t.kind == TokenKind::identifier && !is_reserved(t))) {
      ++pos_;
      return t.text;
    }
    fail_syntax("expected " + std::string(what));
  }

  [[noreturn]] void fail_syntax(const std::string& expected) const {
    const Token& t = peek();
    throw SqlError(SqlErrorKind::syntax,
                   fmt::format("syntax error near {} at offset {}: {}", describe_token(t), t.offset, expected),
                   t.offset);
  }
  [[noreturn]] void fail_unsupported(std::string_view construct) const {
    throw SqlError(SqlErrorKind::unsupported,
                   fmt::format("unsupported construct {} at offset {}: only single-table SELECT queries on \"{}\" "
                               "without joins, subqueries, CASE, window functions or set operations are supported",
                               construct, peek().offset, schema_.table),
                   peek().offset);
  }

  void reject_leading_statement() {
    const Token& t = peek();
    for (const char* kw : {"INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "REPLACE", "PRAGMA", "ATTACH"}) {
      if (is_keyword(t, kw)) fail_unsupported(kw);
    }
    if (is_keyword(t, "WITH")) fail_unsupported("WITH");
  }

  // Skips over one select-list expression without interpreting it, honoring
  // parentheses. Stops at a top-level ',', FROM, AS or alias.
  void skip_expression() {
    int depth = 0;
    const std::size_t start = pos_;
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokenKind::end) break;
      if (t.kind == TokenKind::symbol && t.text == "(") ++depth;
      if (t.kind == TokenKind::symbol && t.text == ")") {
        if (depth == 0) break;
        --depth;
      }
      if (depth == 0) {
        if (t.kind == TokenKind::symbol && t.text == ",") break;
        if (is_keyword(t, "FROM") || is_keyword(t, "AS")) break;
        if (pos_ > start && ends_operand(toks_[pos_ - 1]) &&
            ((t.kind == TokenKind::identifier && !is_reserved(t)) || t.kind == TokenKind::quoted_identifier ||
             t.kind == TokenKind::string)) {
          break;  // implicit alias
        }
      }
      ++pos_;
    }
    if (pos_ == start) fail_syntax("expected an expression");
  }
  static bool ends_operand(const Token& t) {
    if (t.kind == TokenKind::symbol) return t.text == ")";
    if (t.kind == TokenKind::identifier) {
      const std::string u = upper(t.text);
      return u == "NULL" || u == "TRUE" || u == "FALSE" || !reserved_words().count(u);
    }
    return true;
  }
  void parse_from(SqlQuery& q) {
    if (is_symbol("(")) {
      ++pos_;
      if (is_keyword(peek(), "SELECT")) fail_unsupported("subquery");
      fail_syntax("expected a table name");
    }
    const Token& t = peek();
    if (t.kind != TokenKind::identifier && t.kind != TokenKind::quoted_identifier) fail_syntax("expected a table name");
    if (t.kind == TokenKind::identifier && is_reserved(t)) fail_syntax("expected a table name");
    if (!text::iequals(t.text, schema_.table)) {
      throw SqlError(SqlErrorKind::unknown_table,
                     fmt::format("unknown table \"{}\" at offset {}; the only table is \"{}\"", t.text, t.offset,
                                 schema_.table),
                     t.offset);
    }
    ++pos_;
    q.table = schema_.table;
    if (accept_keyword("AS")) {
      table_alias_ = expect_name("a table alias after AS");
    } else if ((peek().kind == TokenKind::identifier && !is_reserved(peek())) ||
               peek().kind == TokenKind::quoted_identifier) {
      table_alias_ = peek().text;
      ++pos_;
    }
    if (is_symbol(",")) fail_unsupported("JOIN");
    for (const char* kw : {"JOIN", "INNER", "LEFT", "RIGHT", "FULL", "CROSS", "NATURAL"}) {
      if (is_keyword(peek(), kw)) fail_unsupported("JOIN");
    }
  }

  void check_qualifier(const Token& t) const {
    if (text::iequals(t.text, schema_.table) || (!table_alias_.empty() && text::iequals(t.text, table_alias_))) return;
    throw SqlError(SqlErrorKind::unknown_table,
                   fmt::format("unknown table or alias \"{}\" at offset {}; the only table is \"{}\"", t.text,
                               t.offset, schema_.table),
                   t.offset);
  }

  std::string display_text(std::size_t begin, std::size_t end, const Expr& e) const {
    if (e.kind == ExprKind::column) return e.name;
    const std::size_t from = toks_[begin].offset;
    const std::size_t to = toks_[end - 1].offset + toks_[end - 1].length;
    return std::string(sql_.substr(from, to - from));
  }

  std::int64_t parse_count(std::string_view clause) {
    bool negative = accept_symbol("-");
    const Token& t = peek();
    if (t.kind != TokenKind::integer) fail_syntax(fmt::format("expected an integer after {}", clause));
    ++pos_;
    auto v = *text::parse_int(t.text);
    return negative ? -v : v;
  }

  // ORDER BY / GROUP BY term: positional index, alias or expression.
  Expr parse_term(Scope scope) {
    const Token& t = peek();
    const Token& after = peek(1);
    const bool standalone = after.kind == TokenKind::end || (after.kind == TokenKind::symbol && after.text == ",") ||
                            is_keyword(after, "ASC") || is_keyword(after, "DESC") || is_keyword(after, "LIMIT") ||
                            is_keyword(after, "HAVING") || is_keyword(after, "ORDER") || is_keyword(after, "NULLS") ||
                            (after.kind == TokenKind::symbol && after.text == ";");
    if (t.kind == TokenKind::integer && standalone) {
      ++pos_;
      auto v = *text::parse_int(t.text);
      if (v < 1 || static_cast<std::size_t>(v) > items_->size()) {
        throw SqlError(SqlErrorKind::invalid,
                       fmt::format("{} term {} at offset {} is out of range; the select list has {} columns",
                                   scope == Scope::order ? "ORDER BY" : "GROUP BY", v, t.offset, items_->size()),
                       t.offset);
      }
      Expr e = (*items_)[static_cast<std::size_t>(v - 1)].expr;
      return e;
    }
    return parse_expr(scope);
  }

  // ---- expressions ----

  Expr make(ExprKind kind, std::string name, std::size_t offset) {
    Expr e;
    e.kind = kind;
    e.name = std::move(name);
    e.offset = offset;
    return e;
  }

  Expr parse_expr(Scope scope) { return parse_or(scope); }

  Expr parse_or(Scope scope) {
    Expr left = parse_and(scope);
    while (is_keyword(peek(), "OR")) {
      const std::size_t off = peek().offset;
      ++pos_;
      Expr e = make(ExprKind::binary, "OR", off);
      e.args = {std::move(left), parse_and(scope)};
      left = std::move(e);
    }
    return left;
  }

  Expr parse_and(Scope scope) {
    Expr left = parse_not(scope);
    while (is_keyword(peek(), "AND")) {
      const std::size_t off = peek().offset;
      ++pos_;
      Expr e = make(ExprKind::binary, "AND", off);
      e.args = {std::move(left), parse_not(scope)};
      left = std::move(e);
    }
    return left;
  }

  Expr parse_not(Scope scope) {
    if (is_keyword(peek(), "NOT")) {
      const std::size_t off = peek().offset;
      ++pos_;
      if (is_keyword(peek(), "EXISTS")) fail_unsupported("EXISTS");
      Expr e = make(ExprKind::unary, "NOT", off);
      e.args = {parse_not(scope)};
      return e;
    }
    return parse_equality(scope);
  }

  Expr parse_equality(Scope scope) {
    Expr left = parse_relational(scope);
    for (;;) {
      const Token& t = peek();
      const std::size_t off = t.offset;
      if (t.kind == TokenKind::symbol && (t.text == "=" || t.text == "==" || t.text == "!=" || t.text == "<>")) {
        ++pos_;
        Expr e = make(ExprKind::binary, (t.text == "=" || t.text == "==") ? "=" : "<>", off);
        e.args = {std::move(left), parse_relational(scope)};
        left = std::move(e);
        continue;
      }
      if (is_keyword(t, "IS")) {
        ++pos_;
        Expr e = make(ExprKind::is_null, "IS NULL", off);
        e.negated = accept_keyword("NOT");
        if (!accept_keyword("NULL")) {
          fail_unsupported("IS with a value other than NULL (use = or <>)");
        }
        e.args = {std::move(left)};
        left = std::move(e);
        continue;
      }
      bool negated = false;
      if (is_keyword(t, "NOT") &&
          (is_keyword(peek(1), "IN") || is_keyword(peek(1), "LIKE") || is_keyword(peek(1), "BETWEEN") ||
           is_keyword(peek(1), "GLOB") || is_keyword(peek(1), "REGEXP"))) {
        negated = true;
        ++pos_;
      }
      const Token& op = peek();
      if (is_keyword(op, "IN")) {
        ++pos_;
        expect_symbol("(", "expected '(' after IN");
        if (is_keyword(peek(), "SELECT")) fail_unsupported("subquery");
        Expr e = make(ExprKind::in_list, "IN", off);
        e.negated = negated;
        e.args.push_back(std::move(left));
        if (!is_symbol(")")) {
          do {
            e.args.push_back(parse_expr(scope));
          } while (accept_symbol(","));
        }
        expect_symbol(")", "expected ')' to close the IN list");
        left = std::move(e);
        continue;
      }
      if (is_keyword(op, "LIKE")) {
        ++pos_;
        Expr e = make(ExprKind::like, "LIKE", off);
        e.negated = negated;
        e.args = {std::move(left), parse_relational(scope)};
        if (is_keyword(peek(), "ESCAPE")) fail_unsupported("LIKE ... ESCAPE");
        left = std::move(e);
        continue;
      }
      if (is_keyword(op, "BETWEEN")) {
        ++pos_;
        Expr e = make(ExprKind::between, "BETWEEN", off);
        e.negated = negated;
        Expr low = parse_relational(scope);
        expect_keyword("AND", "expected AND in BETWEEN ... AND ...");
        Expr high = parse_relational(scope);
        e.args = {std::move(left), std::move(low), std::move(high)};
        left = std::move(e);
        continue;
      }
      if (is_keyword(op, "GLOB") || is_keyword(op, "REGEXP") || is_keyword(op, "MATCH")) fail_unsupported(upper(op.text));
      if (negated) fail_syntax("expected IN, LIKE or BETWEEN after NOT");
      return left;
    }
  }

  Expr parse_relational(Scope scope) {
    Expr left = parse_additive(scope);
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokenKind::symbol && (t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=")) {
        ++pos_;
        Expr e = make(ExprKind::binary, t.text, t.offset);
        e.args = {std::move(left), parse_additive(scope)};
        left = std::move(e);
        continue;
      }
      return left;
    }
  }

  Expr parse_additive(Scope scope) {
    Expr left = parse_multiplicative(scope);
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokenKind::symbol && (t.text == "+" || t.text == "-")) {
        ++pos_;
        Expr e = make(ExprKind::binary, t.text, t.offset);
        e.args = {std::move(left), parse_multiplicative(scope)};
        left = std::move(e);
        continue;
      }
      if (t.kind == TokenKind::symbol && t.text == "||") fail_unsupported("string concatenation ||");
      return left;
    }
  }

  Expr parse_multiplicative(Scope scope) {
    Expr left = parse_unary(scope);
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokenKind::symbol && (t.text == "*" || t.text == "/")) {
        ++pos_;
        Expr e = make(ExprKind::binary, t.text, t.offset);
        e.args = {std::move(left), parse_unary(scope)};
        left = std::move(e);
        continue;
      }
      if (t.kind == TokenKind::symbol && t.text == "%") fail_unsupported("modulo operator %");
      if (t.kind == TokenKind::symbol && t.text == "||") fail_unsupported("string concatenation ||");
      return left;
    }
  }

  Expr parse_unary(Scope scope) {
    const Token& t = peek();
    if (t.kind == TokenKind::symbol && (t.text == "-" || t.text == "+")) {
      ++pos_;
      Expr operand = parse_unary(scope);
      if (t.text == "+") return operand;
      if (operand.kind == ExprKind::literal && operand.literal.is_numeric()) {
        if (operand.literal.type() == SqlType::integer && operand.literal.as_int() != INT64_MIN) {
          operand.literal = Value::integer(-operand.literal.as_int());
        } else {
          operand.literal = Value::real(-operand.literal.as_real());
        }
        operand.offset = t.offset;
        return operand;
      }
      Expr e = make(ExprKind::unary, "-", t.offset);
      e.args = {std::move(operand)};
      return e;
    }
    return parse_primary(scope);
  }

  Expr parse_primary(Scope scope) {
    const Token t = peek();
    switch (t.kind) {
      case TokenKind::integer: {
        ++pos_;
        Expr e = make(ExprKind::literal, "", t.offset);
        e.literal = Value::integer(*text::parse_int(t.text));
        return e;
      }
      case TokenKind::real: {
        ++pos_;
        const double v = std::strtod(t.text.c_str(), nullptr);
        if (!std::isfinite(v)) {
          throw SqlError(SqlErrorKind::syntax, fmt::format("number {} at offset {} is out of range", t.text, t.offset),
                         t.offset);
        }
        Expr e = make(ExprKind::literal, "", t.offset);
        e.literal = Value::real(v);
        return e;
      }
      case TokenKind::string: {
        ++pos_;
        Expr e = make(ExprKind::literal, "", t.offset);
        e.literal = Value::text(t.text);
        return e;
      }
      case TokenKind::symbol:
        if (t.text == "(") {
          ++pos_;
          if (is_keyword(peek(), "SELECT")) fail_unsupported("subquery");
          Expr inner = parse_expr(scope);
          if (is_symbol(",")) fail_unsupported("row values");
          expect_symbol(")", "expected ')'");
          return inner;
        }
        fail_syntax("expected an expression");
      case TokenKind::end:
        fail_syntax("expected an expression");
      case TokenKind::identifier:
      case TokenKind::quoted_identifier:
        break;
    }

    if (t.kind == TokenKind::identifier) {
      const std::string u = upper(t.text);
      if (u == "NULL") {
        ++pos_;
        return make(ExprKind::literal, "", t.offset);
      }
      if (u == "TRUE" || u == "FALSE") {
        ++pos_;
        Expr e = make(ExprKind::literal, "", t.offset);
        e.literal = Value::integer(u == "TRUE" ? 1 : 0);
        return e;
      }
      if (u == "CASE") fail_unsupported("CASE");
      if (u == "CAST") fail_unsupported("CAST");
      if (u == "EXISTS") fail_unsupported("EXISTS");
      if (u == "SELECT") fail_unsupported("subquery");
      if (peek(1).kind == TokenKind::symbol && peek(1).text == "(") return parse_function(scope);
      if (reserved_words().count(u)) fail_syntax("expected an expression");
    }
    return parse_column(scope);
  }

  Expr parse_function(Scope scope) {
    const Token t = peek();
    const std::string name = upper(t.text);
    pos_ += 2;  // name (
    static const std::set<std::string> known = {"COUNT", "SUM", "AVG", "MIN", "MAX", "ROUND", "ABS"};
    if (!known.count(name)) {
      throw SqlError(SqlErrorKind::unsupported,
                     fmt::format("unsupported function {} at offset {}; available functions: COUNT, SUM, AVG, MIN, "
                                 "MAX, ROUND, ABS",
                                 name, t.offset),
                     t.offset);
    }
    Expr e = make(ExprKind::function, name, t.offset);
    if (name == "COUNT" && is_symbol("*")) {
      ++pos_;
      expect_symbol(")", "expected ')' after COUNT(*");
      e.kind = ExprKind::count_star;
      return finish_function(std::move(e));
    }
    const bool aggregate = name == "COUNT" || name == "SUM" || name == "AVG" || name == "MIN" || name == "MAX";
    if (accept_keyword("DISTINCT")) {
      if (!aggregate) fail_syntax("DISTINCT is only allowed in aggregate functions");
      e.distinct = true;
    }
    if (!is_symbol(")")) {
      do {
        e.args.push_back(parse_expr(scope));
      } while (accept_symbol(","));
    }
    expect_symbol(")", fmt::format("expected ')' to close {}(", name));
    std::size_t min_args = 1, max_args = 1;
    if (name == "ROUND") max_args = 2;
    if (e.args.size() < min_args || e.args.size() > max_args) {
      if (aggregate && e.args.size() > 1) {
        throw SqlError(SqlErrorKind::unsupported,
                       fmt::format("{} with {} arguments at offset {} is not supported; aggregates take one argument",
                                   name, e.args.size(), t.offset),
                       t.offset);
      }
      throw SqlError(SqlErrorKind::invalid,
                     fmt::format("wrong number of arguments to {} at offset {}", name, t.offset), t.offset);
    }
    if (aggregate && contains_aggregate(e.args[0])) {
      throw SqlError(SqlErrorKind::invalid, fmt::format("aggregate {} at offset {} contains another aggregate", name, t.offset),
                     t.offset);
    }
    return finish_function(std::move(e));
  }

  Expr finish_function(Expr e) {
    if (is_keyword(peek(), "OVER")) fail_unsupported("OVER (window functions)");
    if (is_keyword(peek(), "FILTER")) fail_unsupported("FILTER");
    return e;
  }

  Expr parse_column(Scope scope) {
    Token name_tok = peek();
    ++pos_;
    bool qualified = false;
    if (is_symbol(".")) {
      ++pos_;
      const Token& col = peek();
      if (col.kind != TokenKind::identifier && col.kind != TokenKind::quoted_identifier) {
        fail_syntax("expected a column name after '.'");
      }
      check_qualifier(name_tok);
      name_tok = col;
      ++pos_;
      qualified = true;
    }
    const std::string& name = name_tok.text;
    const SchemaColumn* col = schema_.find(name);
    const SelectItem* alias = nullptr;
    if (!qualified && items_ && scope != Scope::select && scope != Scope::where) {
      for (const auto& item : *items_) {
        if (!item.alias.empty() && text::iequals(item.alias, name)) {
          alias = &item;
          break;
        }
      }
    }
    // ORDER BY prefers result aliases; other clauses prefer table columns.
    if (alias && (scope == Scope::order || !col)) return alias->expr;
    if (!col) {
      if (!qualified && items_ && scope == Scope::where) {
        for (const auto& item : *items_) {
          if (!item.alias.empty() && text::iequals(item.alias, name)) return item.expr;
        }
      }
      std::vector<std::string> names;
      for (const auto& c : schema_.columns) names.push_back("\"" + c.name + "\"");
      throw SqlError(SqlErrorKind::unknown_column,
                     fmt::format("unknown column \"{}\" at offset {}; available columns: {}", name, name_tok.offset,
                                 text::join(names, ", ")),
                     name_tok.offset);
    }
    return make(ExprKind::column, col->name, name_tok.offset);
  }

  // Columns outside aggregates must be grouped.
  void check_grouping(const SqlQuery& q) const {
    if (!q.aggregated()) return;
    for (const auto& i : q.items) check_grouped(i.expr, q.group_by);
    if (q.having) check_grouped(*q.having, q.group_by);
    for (const auto& o : q.order_by) check_grouped(o.expr, q.group_by);
  }
  void check_grouped(const Expr& e, const std::vector<Expr>& keys) const {
    if (is_aggregate(e)) return;
    if (std::find(keys.begin(), keys.end(), e) != keys.end()) return;
    if (e.kind == ExprKind::column) {
      throw SqlError(SqlErrorKind::invalid,
                     fmt::format("column \"{}\" at offset {} must appear in GROUP BY or be used inside an aggregate "
                                 "function",
                                 e.name, e.offset),
                     e.offset);
    }
    for (const auto& a : e.args) check_grouped(a, keys);
  }
};

std::string quote_ident(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string literal_sql(const Value& v) {
  switch (v.type()) {
    case SqlType::null: return "NULL";
    case SqlType::integer: {
      const auto i = v.as_int();
      return i < 0 ? fmt::format("({})", i) : std::to_string(i);
    }
    case SqlType::real: {
      std::string s = fmt::format("{}", std::fabs(v.as_real()));
      if (s.find_first_of(".e") == std::string::npos) s += ".0";
      return std::signbit(v.as_real()) ? "(-" + s + ")" : s;
    }
    case SqlType::text: {
      std::string out = "'";
      for (char c : v.as_text()) {
        if (c == '\'') out.push_back('\'');
        out.push_back(c);
      }
      return out + "'";
    }
  }
  return "NULL";
}

}  // namespace

SqlQuery parse(std::string_view sql_text, const Schema& schema) {
  Parser p(sql_text, schema);
  return p.parse_query();
}

std::string to_sql(const Expr& e) {
  switch (e.kind) {
    case ExprKind::column: return quote_ident(e.name);
    case ExprKind::literal: return literal_sql(e.literal);
    case ExprKind::unary:
      return e.name == "NOT" ? "(NOT " + to_sql(e.args[0]) + ")" : "(-" + to_sql(e.args[0]) + ")";
    case ExprKind::binary: return "(" + to_sql(e.args[0]) + " " + e.name + " " + to_sql(e.args[1]) + ")";
    case ExprKind::count_star: return "COUNT(*)";
    case ExprKind::function: {
      std::vector<std::string> args;
      for (const auto& a : e.args) args.push_back(to_sql(a));
      return e.name + "(" + (e.distinct ? "DISTINCT " : "") + text::join(args, ", ") + ")";
    }
    case ExprKind::in_list: {
      std::vector<std::string> items;
      for (std::size_t i = 1; i < e.args.size(); ++i) items.push_back(to_sql(e.args[i]));
      return "(" + to_sql(e.args[0]) + (e.negated ? " NOT IN (" : " IN (") + text::join(items, ", ") + "))";
    }
    case ExprKind::between:
      return "(" + to_sql(e.args[0]) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") + to_sql(e.args[1]) + " AND " +
             to_sql(e.args[2]) + ")";
    case ExprKind::like:
      return "(" + to_sql(e.args[0]) + (e.negated ? " NOT LIKE " : " LIKE ") + to_sql(e.args[1]) + ")";
    case ExprKind::is_null: return "(" + to_sql(e.args[0]) + (e.negated ? " IS NOT NULL)" : " IS NULL)");
  }
  return "NULL";
}

namespace {

// A bare integer in ORDER BY / GROUP BY would read back as a position.
std::string term_sql(const Expr& e) {
  const std::string s = to_sql(e);
  return e.kind == ExprKind::literal && e.literal.type() == SqlType::integer && e.literal.as_int() >= 0 ? "(" + s + ")"
                                                                                                      : s;
}

}  // namespace

std::string to_sql(const SqlQuery& q) {
  std::string out = q.distinct ? "SELECT DISTINCT " : "SELECT ";
  std::vector<std::string> items;
  for (const auto& i : q.items) {
    items.push_back(to_sql(i.expr) + (i.alias.empty() ? "" : " AS " + quote_ident(i.alias)));
  }
  out += text::join(items, ", ");
  out += " FROM " + quote_ident(q.table);
  if (q.where) out += " WHERE " + to_sql(*q.where);
  if (!q.group_by.empty()) {
    std::vector<std::string> keys;
    for (const auto& g : q.group_by) keys.push_back(term_sql(g));
    out += " GROUP BY " + text::join(keys, ", ");
  }
  if (q.having) out += " HAVING " + to_sql(*q.having);
  if (!q.order_by.empty()) {
    std::vector<std::string> keys;
    for (const auto& o : q.order_by) keys.push_back(term_sql(o.expr) + (o.descending ? " DESC" : " ASC"));
    out += " ORDER BY " + text::join(keys, ", ");
  }
  if (q.limit) out += fmt::format(" LIMIT {}", *q.limit);
  if (q.offset) out += fmt::format(" OFFSET {}", *q.offset);
  return out;
}

}  // namespace factflow::sql
