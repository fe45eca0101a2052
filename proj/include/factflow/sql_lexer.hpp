#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "factflow/error.hpp"

namespace factflow::sql {

enum class SqlErrorKind {
  syntax,
  unknown_table,
  unknown_column,
  unsupported,
  invalid,        // well-formed but semantically wrong (misplaced aggregate, bad ORDER BY index)
  type_mismatch,  // execution: text compared with or computed against numbers
  runtime,
};

std::string_view to_string(SqlErrorKind kind);

// Messages carry a stable prefix: "parse: " for errors found before
// execution, "exec: " for errors found while executing. They are written to
// be pasted back into a repair prompt.
class SqlError : public Error {
 public:
  SqlError(SqlErrorKind kind, const std::string& message, std::size_t offset = 0);
  SqlErrorKind sql_kind() const noexcept { return sql_kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  SqlErrorKind sql_kind_;
  std::size_t offset_;
};

enum class TokenKind {
  identifier,         // bare word; keywords are recognised by the parser
  quoted_identifier,  // "name", `name` or [name]
  integer,
  real,
  string,             // 'text' with '' escapes
  symbol,             // operators and punctuation
  end,
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;         // unescaped value for strings/quoted identifiers
  std::size_t offset = 0;   // byte offset of the token in the source
  std::size_t length = 0;   // byte length of the raw token
};

// Splits SQL text into tokens, skipping whitespace and comments. Throws
// SqlError (sql_parse) on unterminated strings or stray characters.
std::vector<Token> tokenize(std::string_view sql);

bool is_keyword(const Token& t, std::string_view upper_word);

}  // namespace factflow::sql
