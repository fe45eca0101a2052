#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace factflow {

enum class ErrorKind {
  csv_parse,        // malformed CSV input
  validation,       // bad argument, bad edit, bad request
  not_found,        // unknown sheet, dataset, block or asset
  conflict,         // stale revision on an edit
  unsupported,      // request outside the pipeline's capabilities
  sql_parse,        // SQL rejected before execution
  sql_exec,         // SQL failed during execution
  schema,           // JSON payload does not match a worker schema
  transport,        // LLM transport failure
  fixture_missing,  // replay transport has no recorded response
  worker,           // worker output unusable after repairs
  extraction,       // Data Extractor exhausted its attempts
  generation,       // no usable facts for a sheet
  io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Diagnostics that do not belong in the one-line message: raw LLM text,
  // the last failing SQL, a per-fact failure report.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace factflow
