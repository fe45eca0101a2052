#include "factflow/model.hpp"

#include <array>

#include <fmt/format.h>

#include "factflow/error.hpp"
#include "factflow/text.hpp"

namespace factflow {

namespace {

constexpr std::array<std::string_view, kFactTypeCount> kFactTypeNames = {
    "value", "difference", "proportion", "trend",   "categorization", "distribution",
    "rank",  "aggregation", "extreme",   "outlier", "association",
};

constexpr std::array<std::string_view, 5> kChartTypeNames = {"line", "bar", "scatter", "pie", "area"};

using nlohmann::json;

[[noreturn]] void bad_field(std::string_view what, std::string_view field) {
  throw Error(ErrorKind::schema, fmt::format("{}: missing or invalid field \"{}\"", what, field));
}

std::string get_string(const json& j, std::string_view what, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) bad_field(what, field);
  return it->get<std::string>();
}

std::string get_string_or(const json& j, const char* field, std::string fallback) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) bad_field("record", field);
  return it->get<std::string>();
}

std::vector<std::string> get_strings(const json& j, std::string_view what, const char* field, bool required) {
  auto it = j.find(field);
  std::vector<std::string> out;
  if (it == j.end() || it->is_null()) {
    if (required) bad_field(what, field);
    return out;
  }
  if (!it->is_array()) bad_field(what, field);
  for (const auto& v : *it) {
    if (!v.is_string()) bad_field(what, field);
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view to_string(FactType t) { return kFactTypeNames[static_cast<std::size_t>(t)]; }

std::optional<FactType> parse_fact_type(std::string_view s) {
  for (std::size_t i = 0; i < kFactTypeNames.size(); ++i) {
    if (text::iequals(s, kFactTypeNames[i])) return static_cast<FactType>(i);
  }
  return std::nullopt;
}

const std::vector<FactType>& all_fact_types() {
  static const std::vector<FactType> all = [] {
    std::vector<FactType> v;
    for (std::size_t i = 0; i < kFactTypeCount; ++i) v.push_back(static_cast<FactType>(i));
    return v;
  }();
  return all;
}

std::string_view to_string(ChartType t) { return kChartTypeNames[static_cast<std::size_t>(t)]; }

std::optional<ChartType> parse_chart_type(std::string_view s) {
  for (std::size_t i = 0; i < kChartTypeNames.size(); ++i) {
    if (text::iequals(s, kChartTypeNames[i])) return static_cast<ChartType>(i);
  }
  return std::nullopt;
}

const std::vector<ChartType>& all_chart_types() {
  static const std::vector<ChartType> all = {ChartType::line, ChartType::bar, ChartType::scatter, ChartType::pie,
                                             ChartType::area};
  return all;
}

std::size_t ChartParams::encoded_dimensions() const {
  std::size_t n = 0;
  if (!x_field.empty()) ++n;
  if (!y_field.empty()) ++n;
  if (color_field) ++n;
  return n + extra_fields.size();
}

const Section* SheetStructure::find_section(std::string_view id) const {
  for (const auto& s : sections) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::optional<std::size_t> SheetStructure::section_of(std::string_view fact_id) const {
  for (std::size_t i = 0; i < sections.size(); ++i) {
    for (const auto& f : sections[i].fact_ids) {
      if (f == fact_id) return i;
    }
  }
  return std::nullopt;
}

std::size_t SheetStructure::fact_count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.fact_ids.size();
  return n;
}

json to_json(const FactIdea& v) {
  return {{"id", v.id}, {"fact_type", to_string(v.fact_type)}, {"content", v.content}, {"significance", v.significance}};
}

json to_json(const ChartParams& v) {
  json j = {{"chart_type", to_string(v.chart_type)},
            {"x_field", v.x_field},
            {"y_field", v.y_field},
            {"x_label", v.x_label},
            {"y_label", v.y_label},
            {"title", v.title},
            {"color_scheme", v.color_scheme}};
  j["color_field"] = v.color_field ? json(*v.color_field) : json(nullptr);
  if (!v.extra_fields.empty()) j["extra_fields"] = v.extra_fields;
  return j;
}

json to_json(const CausalQA& v) { return {{"question", v.question}, {"answer", v.answer}}; }

json to_json(const FactCard& v) {
  json qas = json::array();
  for (const auto& qa : v.causal_qas) qas.push_back(to_json(qa));
  return {{"idea", to_json(v.idea)},
          {"sql", v.sql},
          {"table", sql::result_to_json(v.table)},
          {"chart", to_json(v.chart)},
          {"chart_block", v.chart_block},
          {"statement", v.statement},
          {"causal_qas", qas}};
}

json to_json(const Section& v) { return {{"id", v.id}, {"topic", v.topic}, {"fact_ids", v.fact_ids}}; }

json to_json(const SheetStructure& v) {
  json sections = json::array();
  for (const auto& s : v.sections) sections.push_back(to_json(s));
  return {{"title", v.title}, {"introduction", v.introduction}, {"sections", sections}};
}

FactIdea fact_idea_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema, "fact idea: expected an object");
  FactIdea f;
  f.id = get_string_or(j, "id", "");
  auto type = parse_fact_type(get_string(j, "fact idea", "fact_type"));
  if (!type) bad_field("fact idea", "fact_type");
  f.fact_type = *type;
  f.content = get_string(j, "fact idea", "content");
  auto sig = j.find("significance");
  if (sig != j.end() && !sig->is_null()) {
    if (!sig->is_number()) bad_field("fact idea", "significance");
    f.significance = sig->get<double>();
  }
  return f;
}

ChartParams chart_params_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema, "chart params: expected an object");
  ChartParams p;
  auto type = parse_chart_type(get_string(j, "chart params", "chart_type"));
  if (!type) bad_field("chart params", "chart_type");
  p.chart_type = *type;
  p.x_field = get_string(j, "chart params", "x_field");
  p.y_field = get_string(j, "chart params", "y_field");
  auto color = j.find("color_field");
  if (color != j.end() && !color->is_null()) {
    if (!color->is_string()) bad_field("chart params", "color_field");
    if (!color->get<std::string>().empty()) p.color_field = color->get<std::string>();
  }
  p.extra_fields = get_strings(j, "chart params", "extra_fields", false);
  p.x_label = get_string_or(j, "x_label", p.x_field);
  p.y_label = get_string_or(j, "y_label", p.y_field);
  p.title = get_string_or(j, "title", "");
  p.color_scheme = get_string_or(j, "color_scheme", "categorical");
  return p;
}

FactCard fact_card_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema, "fact card: expected an object");
  FactCard c;
  c.idea = fact_idea_from_json(j.at("idea"));
  c.sql = get_string(j, "fact card", "sql");
  c.table = sql::result_from_json(j.at("table"));
  c.chart = chart_params_from_json(j.at("chart"));
  c.chart_block = get_string_or(j, "chart_block", "");
  c.statement = get_string(j, "fact card", "statement");
  for (const auto& qa : j.value("causal_qas", json::array())) {
    c.causal_qas.push_back({get_string(qa, "causal qa", "question"), get_string(qa, "causal qa", "answer")});
  }
  return c;
}

SheetStructure structure_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema, "structure: expected an object");
  SheetStructure s;
  s.title = get_string(j, "structure", "title");
  s.introduction = get_string_or(j, "introduction", "");
  auto it = j.find("sections");
  if (it == j.end() || !it->is_array()) bad_field("structure", "sections");
  for (const auto& sj : *it) {
    if (!sj.is_object()) bad_field("structure", "sections");
    Section sec;
    sec.id = get_string(sj, "section", "id");
    sec.topic = get_string(sj, "section", "topic");
    sec.fact_ids = get_strings(sj, "section", "fact_ids", true);
    s.sections.push_back(std::move(sec));
  }
  return s;
}

}  // namespace factflow
