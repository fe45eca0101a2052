#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factflow/sql.hpp"
#include "json.hpp"

// Records passed between workers and persisted with a sheet.
namespace factflow {

enum class FactType {
  value,
  difference,
  proportion,
  trend,
  categorization,
  distribution,
  rank,
  aggregation,
  extreme,
  outlier,
  association,
};

inline constexpr std::size_t kFactTypeCount = 11;

std::string_view to_string(FactType t);
std::optional<FactType> parse_fact_type(std::string_view s);  // case-insensitive
const std::vector<FactType>& all_fact_types();

struct FactIdea {
  std::string id;
  FactType fact_type = FactType::value;
  std::string content;
  double significance = 0;
  friend bool operator==(const FactIdea&, const FactIdea&) = default;
};

enum class ChartType { line, bar, scatter, pie, area };

std::string_view to_string(ChartType t);
std::optional<ChartType> parse_chart_type(std::string_view s);
const std::vector<ChartType>& all_chart_types();

struct ChartParams {
  ChartType chart_type = ChartType::bar;
  std::string x_field;
  std::string y_field;
  std::optional<std::string> color_field;
  // Further encodings an agent asked for (size, shape, ...). Any entry here
  // pushes the encoding count past what the renderer accepts for most charts.
  std::vector<std::string> extra_fields;
  std::string x_label;
  std::string y_label;
  std::string title;
  std::string color_scheme = "categorical";

  std::size_t encoded_dimensions() const;
  friend bool operator==(const ChartParams&, const ChartParams&) = default;
};

struct CausalQA {
  std::string question;
  std::string answer;
  friend bool operator==(const CausalQA&, const CausalQA&) = default;
};

struct FactCard {
  FactIdea idea;
  std::string sql;
  sql::ResultTable table;
  ChartParams chart;
  std::string chart_block;  // block store path of the rendered SVG
  std::string statement;
  std::vector<CausalQA> causal_qas;
  friend bool operator==(const FactCard&, const FactCard&) = default;
};

inline constexpr std::string_view kIntroductionId = "intro";
inline constexpr std::string_view kIntroductionTopic = "Introduction";

struct Section {
  std::string id;
  std::string topic;
  std::vector<std::string> fact_ids;
  friend bool operator==(const Section&, const Section&) = default;
};

// sections[0] is always the Introduction, which carries text and no facts.
struct SheetStructure {
  std::string title;
  std::string introduction;
  std::vector<Section> sections;

  const Section* find_section(std::string_view id) const;
  // Index of the section holding the fact, if any.
  std::optional<std::size_t> section_of(std::string_view fact_id) const;
  std::size_t fact_count() const;
  friend bool operator==(const SheetStructure&, const SheetStructure&) = default;
};

nlohmann::json to_json(const FactIdea& v);
nlohmann::json to_json(const ChartParams& v);
nlohmann::json to_json(const CausalQA& v);
nlohmann::json to_json(const FactCard& v);
nlohmann::json to_json(const Section& v);
nlohmann::json to_json(const SheetStructure& v);

// Throw Error(schema) on missing or mistyped fields.
FactIdea fact_idea_from_json(const nlohmann::json& j);
ChartParams chart_params_from_json(const nlohmann::json& j);
FactCard fact_card_from_json(const nlohmann::json& j);
SheetStructure structure_from_json(const nlohmann::json& j);

}  // namespace factflow
