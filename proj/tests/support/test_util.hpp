#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "factflow/ingest.hpp"
#include "factflow/service.hpp"
#include "factflow/sql.hpp"

namespace factflow::testutil {

inline std::filesystem::path source_dir() { return FACTFLOW_SOURCE_DIR; }
inline std::filesystem::path fixtures_dir() { return source_dir() / "fixtures" / "replay"; }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("factflow_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ingest::Dataset sample(const std::string& stem) {
  auto bytes = service::read_file(source_dir() / "data" / (stem + ".csv"));
  return ingest::classify_columns(ingest::load_csv(bytes, stem));
}

inline sql::Value cell(std::int64_t v) { return sql::Value::integer(v); }
inline sql::Value cell(int v) { return sql::Value::integer(v); }
inline sql::Value cell(double v) { return sql::Value::real(v); }
inline sql::Value cell(const char* v) { return sql::Value::text(v); }

inline sql::ResultTable table(std::vector<sql::ResultColumn> cols, std::vector<std::vector<sql::Value>> rows) {
  return {std::move(cols), std::move(rows)};
}

}  // namespace factflow::testutil
