#include "factflow/error.hpp"

namespace factflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::csv_parse: return "csv_parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::sql_parse: return "sql_parse";
    case ErrorKind::sql_exec: return "sql_exec";
    case ErrorKind::schema: return "schema";
    case ErrorKind::transport: return "transport";
    case ErrorKind::fixture_missing: return "fixture_missing";
    case ErrorKind::worker: return "worker";
    case ErrorKind::extraction: return "extraction";
    case ErrorKind::generation: return "generation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace factflow
