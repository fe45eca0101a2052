#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factflow/chart.hpp"
#include "factflow/layout.hpp"
#include "factflow/model.hpp"
#include "json.hpp"

namespace factflow::sheet {

struct FactSheet {
  std::string id;
  std::string dataset_ref;
  std::optional<std::string> user_request;
  std::uint64_t seed = 0;
  SheetStructure structure;
  std::map<std::string, FactCard> facts;
  layout::LayoutPlan plan;
  std::int64_t revision = 0;
  std::string created_at;
  std::string updated_at;
  // Highest fact and section numbers handed out, so ids are never reused.
  std::int64_t fact_counter = 0;
  std::int64_t section_counter = 0;

  friend bool operator==(const FactSheet&, const FactSheet&) = default;
};

nlohmann::json to_json(const FactSheet& s);
// Throws Error(schema) on malformed documents.
FactSheet sheet_from_json(const nlohmann::json& j);

// Recomputes the plan from the structure.
void relayout(FactSheet& s);

// Broken invariants: partition of fact ids, pinned and empty Introduction,
// unique section ids, non-empty topics, plan matching the structure.
std::vector<std::string> sheet_problems(const FactSheet& s);

enum class EditKind {
  add_section,
  delete_section,
  move_section,
  rename_section,
  delete_fact,
  move_fact,
  reorder_fact,
  edit_text,
};

std::string_view to_string(EditKind k);
std::optional<EditKind> parse_edit_kind(std::string_view s);

// Positions index the target list after the item has been taken out.
//   add_section    topic, position? (1..sections, default last)
//   delete_section section_id (deletes its facts too)
//   move_section   section_id, position (1..sections-1)
//   rename_section section_id, topic
//   delete_fact    fact_id
//   move_fact      fact_id, section_id, position? (default last)
//   reorder_fact   fact_id, position
//   edit_text      field (title | introduction | statement | chart_title), text, fact_id for the fact fields
struct EditOp {
  EditKind kind = EditKind::add_section;
  std::string section_id;
  std::string fact_id;
  std::string topic;
  std::string field;
  std::string text;
  std::optional<std::int64_t> position;
  friend bool operator==(const EditOp&, const EditOp&) = default;
};

nlohmann::json to_json(const EditOp& op);
// Throws Error(validation) on unknown ops or missing fields.
EditOp edit_from_json(const nlohmann::json& j);

// Applies one op, bumps the revision and recomputes the plan. Throws
// Error(validation) with the sheet untouched when the op does not fit.
void apply_edit(FactSheet& s, const EditOp& op);

// Adds a finished card to a topical section under a fresh id; returns the id.
std::string insert_fact(FactSheet& s, FactCard card, std::string_view section_id);

// Whole page as drawing primitives: title band, Introduction text, section
// headings and one fact card per fact (scaled chart, statement, questions).
chart::Scene page_scene(const FactSheet& s);
std::string export_svg(const FactSheet& s);
std::string export_pdf(const FactSheet& s);

inline constexpr double kTitleBand = 48;
inline constexpr double kChartScale = 0.6;

}  // namespace factflow::sheet
