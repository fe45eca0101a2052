#include "factflow/representation.hpp"

#include <fmt/format.h>

#include "factflow/rng.hpp"
#include "factflow/text.hpp"

namespace factflow::repr {

using ingest::DataClass;

std::string sql_type(DataClass c) {
  switch (c) {
    case DataClass::discrete: return "INTEGER";
    case DataClass::continuous: return "REAL";
    default: return "TEXT";
  }
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string emit_ddl(const ingest::Dataset& ds) {
  std::vector<std::string> cols;
  for (const auto& c : ds.columns) {
    if (!c.data_class) throw Error(ErrorKind::validation, "dataset must be classified before emitting DDL");
    cols.push_back(quote_identifier(c.name) + " " + sql_type(*c.data_class));
  }
  return fmt::format("CREATE TABLE {} ({});", quote_identifier(ds.name), text::join(cols, ", "));
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

namespace {

std::vector<ColumnSummary> summarize(const ingest::Dataset& ds, const anon::AnonymizationMap& map) {
  std::vector<ColumnSummary> out;
  for (const auto& col : ds.columns) {
    ColumnSummary s;
    s.name = col.name;
    s.data_class = *col.data_class;
    s.sql_type = sql_type(s.data_class);
    std::vector<std::string> stats;
    const bool all_null = std::all_of(col.cells.begin(), col.cells.end(), [](const auto& c) { return !c; });
    if (all_null) {
      s.profile.null_count = col.cells.size();
      stats.push_back("all values null");
    } else {
      s.profile = ingest::profile_column(col);
      if (s.profile.numeric) {
        const auto& n = *s.profile.numeric;
        stats.push_back("min=" + text::format_display(n.min));
        stats.push_back("max=" + text::format_display(n.max));
        stats.push_back("mean=" + text::format_display(n.mean));
        stats.push_back("median=" + text::format_display(n.median));
        stats.push_back("p25=" + text::format_display(n.p25));
        stats.push_back("p75=" + text::format_display(n.p75));
      } else if (s.profile.strings) {
        auto& st = *s.profile.strings;
        const auto* m = map.find(col.name);
        std::vector<std::string> top;
        for (auto& [value, count] : st.top_values) {
          if (m) {
            auto it = m->forward.find(value);
            if (it != m->forward.end()) value = it->second;
          }
          top.push_back(fmt::format("{} ({})", value, count));
        }
        stats.push_back(fmt::format("unique={}", st.unique_count));
        stats.push_back("top=[" + text::join(top, "; ") + "]");
      }
    }
    stats.push_back(fmt::format("nulls={}", s.profile.null_count));
    s.stats_line = fmt::format("{} ({}): {}", col.name, ingest::to_string(s.data_class), text::join(stats, ", "));
    out.push_back(std::move(s));
  }
  return out;
}

std::string stats_text(const std::vector<ColumnSummary>& cols) {
  std::vector<std::string> lines;
  for (const auto& c : cols) lines.push_back(c.stats_line);
  return text::join(lines, "\n");
}

std::string csv_field(const ingest::Cell& cell) {
  if (!cell) return {};
  const std::string& v = *cell;
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string csv_line(const anon::Row& cells) {
  std::vector<std::string> parts;
  for (const auto& c : cells) parts.push_back(csv_field(c));
  return text::join(parts, ",");
}

std::string emit_stats(const ingest::Dataset& ds, const anon::AnonymizationMap& map) {
  return stats_text(summarize(ds, map));
}

std::string DatasetRepresentation::text() const {
  std::string out = ddl + "\n\n" + stats_block;
  if (!example_rows.empty()) {
    anon::Row head(header.begin(), header.end());
    out += "\n\n" + csv_line(head);
    for (const auto& r : example_rows) out += "\n" + csv_line(r);
  }
  return out;
}

nlohmann::json DatasetRepresentation::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json j = {{"name", c.name},
                        {"class", std::string(ingest::to_string(c.data_class))},
                        {"sql_type", c.sql_type},
                        {"nulls", c.profile.null_count}};
    if (c.profile.numeric) {
      const auto& n = *c.profile.numeric;
      j["stats"] = {{"min", n.min}, {"max", n.max}, {"mean", n.mean},
                    {"median", n.median}, {"p25", n.p25}, {"p75", n.p75}};
    } else if (c.profile.strings) {
      nlohmann::json top = nlohmann::json::array();
      for (const auto& [v, n] : c.profile.strings->top_values) top.push_back({{"value", v}, {"count", n}});
      j["stats"] = {{"unique", c.profile.strings->unique_count}, {"top", top}};
    }
    cols.push_back(std::move(j));
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : example_rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : r) row.push_back(c ? nlohmann::json(*c) : nlohmann::json());
    rows.push_back(std::move(row));
  }
  return {{"table", table_name}, {"ddl", ddl},       {"stats_block", stats_block}, {"columns", cols},
          {"header", header},    {"rows", rows},     {"token_estimate", token_estimate}};
}

std::size_t minimum_budget(const ingest::Dataset& ds, const anon::AnonymizationMap& map) {
  return estimate_tokens(emit_ddl(ds) + "\n\n" + emit_stats(ds, map));
}

DatasetRepresentation build_representation(const ingest::Dataset& ds, const anon::AnonymizationMap& map,
                                           std::size_t budget_tokens, std::uint64_t seed) {
  DatasetRepresentation rep;
  rep.table_name = ds.name;
  rep.ddl = emit_ddl(ds);
  rep.columns = summarize(ds, map);
  rep.stats_block = stats_text(rep.columns);
  for (const auto& c : ds.columns) rep.header.push_back(c.name);

  const std::size_t base_chars = rep.ddl.size() + 2 + rep.stats_block.size();
  const std::size_t minimum = estimate_tokens(rep.ddl + "\n\n" + rep.stats_block);
  if (budget_tokens < minimum) {
    throw Error(ErrorKind::validation,
                fmt::format("budget of {} tokens is too small; the minimum feasible budget is {}", budget_tokens,
                            minimum));
  }

  std::vector<std::size_t> order(ds.row_count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, "repr:rows");
  rng.shuffle(order);

  anon::Row head(rep.header.begin(), rep.header.end());
  std::size_t chars = base_chars + 2 + csv_line(head).size();
  const std::size_t budget_chars = budget_tokens * 4;
  for (auto idx : order) {
    auto row = anon::anonymize_rows(ds, map, {idx}).front();
    const std::size_t next = chars + 1 + csv_line(row).size();
    if (next > budget_chars) break;
    chars = next;
    rep.example_rows.push_back(std::move(row));
  }
  rep.token_estimate = estimate_tokens(rep.text());
  return rep;
}

}  // namespace factflow::repr
