#include "factflow/sql_lexer.hpp"

#include <cctype>

#include "factflow/text.hpp"

namespace factflow::sql {

std::string_view to_string(SqlErrorKind kind) {
  switch (kind) {
    case SqlErrorKind::syntax: return "syntax";
    case SqlErrorKind::unknown_table: return "unknown_table";
    case SqlErrorKind::unknown_column: return "unknown_column";
    case SqlErrorKind::unsupported: return "unsupported";
    case SqlErrorKind::invalid: return "invalid";
    case SqlErrorKind::type_mismatch: return "type_mismatch";
    case SqlErrorKind::runtime: return "runtime";
  }
  return "syntax";
}

namespace {

bool is_exec(SqlErrorKind k) {
  return k == SqlErrorKind::type_mismatch || k == SqlErrorKind::runtime;
}

}  // namespace

SqlError::SqlError(SqlErrorKind kind, const std::string& message, std::size_t offset)
    : Error(is_exec(kind) ? ErrorKind::sql_exec : ErrorKind::sql_parse,
            std::string(is_exec(kind) ? "exec: " : "parse: ") + message),
      sql_kind_(kind),
      offset_(offset) {}

bool is_keyword(const Token& t, std::string_view upper_word) {
  return t.kind == TokenKind::identifier && text::iequals(t.text, upper_word);
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto at = [&](std::size_t k) { return k < n ? sql[k] : '\0'; };

  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && at(i + 1) == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '*') {
      std::size_t close = sql.find("*/", i + 2);
      if (close == std::string_view::npos) {
        throw SqlError(SqlErrorKind::syntax, "unterminated /* comment at offset " + std::to_string(i), i);
      }
      i = close + 2;
      continue;
    }

    Token tok;
    tok.offset = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_' || sql[j] == '$')) ++j;
      tok.kind = TokenKind::identifier;
      tok.text = std::string(sql.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::size_t j = i + 1;
      std::string value;
      bool closed = false;
      while (j < n) {
        if (sql[j] == close) {
          if (close != ']' && at(j + 1) == close) {
            value.push_back(close);
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        value.push_back(sql[j++]);
      }
      if (!closed) {
        throw SqlError(SqlErrorKind::syntax, "unterminated quoted identifier at offset " + std::to_string(i), i);
      }
      tok.kind = TokenKind::quoted_identifier;
      tok.text = std::move(value);
      i = j;
    } else if (c == '\'') {
      std::size_t j = i + 1;
      std::string value;
      bool closed = false;
      while (j < n) {
        if (sql[j] == '\'') {
          if (at(j + 1) == '\'') {
            value.push_back('\'');
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        value.push_back(sql[j++]);
      }
      if (!closed) {
        throw SqlError(SqlErrorKind::syntax, "unterminated string literal at offset " + std::to_string(i), i);
      }
      tok.kind = TokenKind::string;
      tok.text = std::move(value);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && std::isdigit(static_cast<unsigned char>(at(i + 1))))) {
      std::size_t j = i;
      bool real = false;
      while (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      if (at(j) == '.') {
        real = true;
        ++j;
        while (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      }
      if (at(j) == 'e' || at(j) == 'E') {
        std::size_t k = j + 1;
        if (at(k) == '+' || at(k) == '-') ++k;
        if (std::isdigit(static_cast<unsigned char>(at(k)))) {
          real = true;
          j = k;
          while (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
        }
      }
      tok.text = std::string(sql.substr(i, j - i));
      tok.kind = real || !text::parse_int(tok.text) ? TokenKind::real : TokenKind::integer;
      i = j;
    } else {
      static constexpr std::string_view kTwo[] = {"<=", ">=", "<>", "!=", "==", "||"};
      tok.kind = TokenKind::symbol;
      bool matched = false;
      for (auto two : kTwo) {
        if (sql.substr(i, 2) == two) {
          tok.text = std::string(two);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        static constexpr std::string_view kOne = "=<>+-*/(),.;%";
        if (kOne.find(c) == std::string_view::npos) {
          throw SqlError(SqlErrorKind::syntax,
                         "unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(i), i);
        }
        tok.text = std::string(1, c);
        ++i;
      }
    }
    tok.length = i - tok.offset;
    out.push_back(std::move(tok));
  }
  Token end;
  end.offset = n;
  out.push_back(end);
  return out;
}

}  // namespace factflow::sql
