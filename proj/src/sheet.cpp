#include "factflow/sheet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

#include "factflow/error.hpp"
#include "factflow/pdf.hpp"
#include "factflow/text.hpp"

namespace factflow::sheet {

using nlohmann::json;

json to_json(const FactSheet& s) {
  json facts = json::object();
  for (const auto& [id, card] : s.facts) facts[id] = factflow::to_json(card);
  return {{"id", s.id},
          {"dataset_ref", s.dataset_ref},
          {"user_request", s.user_request ? json(*s.user_request) : json(nullptr)},
          {"seed", s.seed},
          {"revision", s.revision},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at},
          {"fact_counter", s.fact_counter},
          {"section_counter", s.section_counter},
          {"structure", factflow::to_json(s.structure)},
          {"facts", facts},
          {"plan", layout::to_json(s.plan)}};
}

FactSheet sheet_from_json(const json& j) {
  FactSheet s;
  try {
    s.id = j.at("id").get<std::string>();
    s.dataset_ref = j.at("dataset_ref").get<std::string>();
    if (j.contains("user_request") && !j["user_request"].is_null())
      s.user_request = j["user_request"].get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.revision = j.at("revision").get<std::int64_t>();
    s.created_at = j.value("created_at", "");
    s.updated_at = j.value("updated_at", "");
    s.fact_counter = j.value("fact_counter", std::int64_t{0});
    s.section_counter = j.value("section_counter", std::int64_t{0});
    s.structure = structure_from_json(j.at("structure"));
    for (const auto& [id, card] : j.at("facts").items()) s.facts.emplace(id, fact_card_from_json(card));
    s.plan = layout::plan_from_json(j.at("plan"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("malformed sheet document: {}", e.what()));
  }
  return s;
}

void relayout(FactSheet& s) { s.plan = layout::split_columns(layout::blocks_for(s.structure)); }

std::vector<std::string> sheet_problems(const FactSheet& s) {
  std::vector<std::string> out;
  const auto& secs = s.structure.sections;
  if (secs.empty() || secs[0].id != kIntroductionId) {
    out.push_back("Introduction is not the first section");
  } else if (!secs[0].fact_ids.empty()) {
    out.push_back("Introduction holds facts");
  }
  std::set<std::string> ids;
  std::map<std::string, int> seen;
  for (const auto& sec : secs) {
    if (!ids.insert(sec.id).second) out.push_back(fmt::format("duplicate section id {}", sec.id));
    if (text::trim(sec.topic).empty()) out.push_back(fmt::format("section {} has an empty topic", sec.id));
    if (sec.id == kIntroductionId && &sec != &secs[0]) out.push_back("Introduction is not first");
    for (const auto& f : sec.fact_ids) {
      if (!s.facts.count(f)) out.push_back(fmt::format("section {} lists unknown fact {}", sec.id, f));
      if (++seen[f] == 2) out.push_back(fmt::format("fact {} is listed twice", f));
    }
  }
  for (const auto& [id, card] : s.facts) {
    if (!seen.count(id)) out.push_back(fmt::format("fact {} is in no section", id));
    if (card.idea.id != id) out.push_back(fmt::format("fact {} carries id {}", id, card.idea.id));
    if (text::trim(card.statement).empty()) out.push_back(fmt::format("fact {} has no statement", id));
    if (card.chart.encoded_dimensions() > chart::kMaxDimensions)
      out.push_back(fmt::format("fact {} encodes too many dimensions", id));
  }
  if (!secs.empty()) {
    auto expected = layout::split_columns(layout::blocks_for(s.structure));
    if (!(expected == s.plan)) out.push_back("layout plan is stale");
    if (!s.plan.column_flags.empty() && !s.plan.column_flags[0]) out.push_back("first section is not on the left");
    if (layout::column_difference(s.plan.ordered_sections, s.plan.column_flags) != s.plan.best_diff)
      out.push_back("layout difference does not match the flags");
  }
  return out;
}

namespace {

constexpr std::pair<EditKind, std::string_view> kEditNames[] = {
    {EditKind::add_section, "add_section"},   {EditKind::delete_section, "delete_section"},
    {EditKind::move_section, "move_section"}, {EditKind::rename_section, "rename_section"},
    {EditKind::delete_fact, "delete_fact"},   {EditKind::move_fact, "move_fact"},
    {EditKind::reorder_fact, "reorder_fact"}, {EditKind::edit_text, "edit_text"},
};

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::validation, message); }

std::string required_text(const json& j, const char* key, EditKind k) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) invalid(fmt::format("{} needs a string \"{}\"", to_string(k), key));
  return it->get<std::string>();
}

std::size_t section_index(const FactSheet& s, const std::string& id) {
  for (std::size_t i = 0; i < s.structure.sections.size(); ++i)
    if (s.structure.sections[i].id == id) return i;
  invalid(fmt::format("no section \"{}\"", id));
}

FactCard& fact_ref(FactSheet& s, const std::string& id) {
  auto it = s.facts.find(id);
  if (it == s.facts.end()) invalid(fmt::format("no fact \"{}\"", id));
  return it->second;
}

std::size_t checked_position(std::optional<std::int64_t> pos, std::int64_t lo, std::int64_t hi, std::int64_t fallback,
                             std::string_view what) {
  std::int64_t p = pos.value_or(fallback);
  if (p < lo || p > hi) invalid(fmt::format("{} position {} is outside {}..{}", what, p, lo, hi));
  return static_cast<std::size_t>(p);
}

std::string non_empty(const std::string& t, std::string_view what) {
  std::string v = text::trim(t);
  if (v.empty()) invalid(fmt::format("{} must not be empty", what));
  return v;
}

void apply_to(FactSheet& s, const EditOp& op) {
  auto& secs = s.structure.sections;
  switch (op.kind) {
    case EditKind::add_section: {
      auto topic = non_empty(op.topic, "section topic");
      auto n = static_cast<std::int64_t>(secs.size());
      if (op.position && *op.position == 0) invalid("Introduction is pinned first");
      auto at = checked_position(op.position, 1, n, n, "section");
      secs.insert(secs.begin() + static_cast<std::ptrdiff_t>(at),
                  Section{fmt::format("s{}", ++s.section_counter), topic, {}});
      break;
    }
    case EditKind::delete_section: {
      auto i = section_index(s, op.section_id);
      if (i == 0) invalid("Introduction cannot be deleted");
      for (const auto& f : secs[i].fact_ids) s.facts.erase(f);
      secs.erase(secs.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
    case EditKind::move_section: {
      auto i = section_index(s, op.section_id);
      if (i == 0) invalid("Introduction is pinned first");
      if (!op.position) invalid("move_section needs a position");
      if (*op.position == 0) invalid("Introduction is pinned first");
      auto at = checked_position(op.position, 1, static_cast<std::int64_t>(secs.size()) - 1, 1, "section");
      Section moved = std::move(secs[i]);
      secs.erase(secs.begin() + static_cast<std::ptrdiff_t>(i));
      secs.insert(secs.begin() + static_cast<std::ptrdiff_t>(at), std::move(moved));
      break;
    }
    case EditKind::rename_section: {
      auto i = section_index(s, op.section_id);
      if (i == 0) invalid("Introduction cannot be renamed");
      secs[i].topic = non_empty(op.topic, "section topic");
      break;
    }
    case EditKind::delete_fact: {
      fact_ref(s, op.fact_id);
      auto i = *s.structure.section_of(op.fact_id);
      auto& ids = secs[i].fact_ids;
      ids.erase(std::find(ids.begin(), ids.end(), op.fact_id));
      s.facts.erase(op.fact_id);
      break;
    }
    case EditKind::move_fact: {
      fact_ref(s, op.fact_id);
      auto to = section_index(s, op.section_id);
      if (to == 0) invalid("facts cannot be placed in the Introduction");
      auto from = *s.structure.section_of(op.fact_id);
      auto& src = secs[from].fact_ids;
      src.erase(std::find(src.begin(), src.end(), op.fact_id));
      auto& dst = secs[to].fact_ids;
      auto n = static_cast<std::int64_t>(dst.size());
      auto at = checked_position(op.position, 0, n, n, "fact");
      dst.insert(dst.begin() + static_cast<std::ptrdiff_t>(at), op.fact_id);
      break;
    }
    case EditKind::reorder_fact: {
      fact_ref(s, op.fact_id);
      if (!op.position) invalid("reorder_fact needs a position");
      auto& ids = secs[*s.structure.section_of(op.fact_id)].fact_ids;
      auto at = checked_position(op.position, 0, static_cast<std::int64_t>(ids.size()) - 1, 0, "fact");
      ids.erase(std::find(ids.begin(), ids.end(), op.fact_id));
      ids.insert(ids.begin() + static_cast<std::ptrdiff_t>(at), op.fact_id);
      break;
    }
    case EditKind::edit_text: {
      if (op.field == "title") {
        s.structure.title = non_empty(op.text, "title");
      } else if (op.field == "introduction") {
        s.structure.introduction = non_empty(op.text, "introduction");
      } else if (op.field == "statement") {
        fact_ref(s, op.fact_id).statement = non_empty(op.text, "statement");
      } else if (op.field == "chart_title") {
        fact_ref(s, op.fact_id).chart.title = text::trim(op.text);
      } else {
        invalid(fmt::format("edit_text field \"{}\" is not one of title, introduction, statement, chart_title",
                            op.field));
      }
      break;
    }
  }
}

}  // namespace

std::string_view to_string(EditKind k) {
  for (const auto& [kind, name] : kEditNames)
    if (kind == k) return name;
  return "unknown";
}

std::optional<EditKind> parse_edit_kind(std::string_view s) {
  for (const auto& [kind, name] : kEditNames)
    if (name == s) return kind;
  return std::nullopt;
}

json to_json(const EditOp& op) {
  json j{{"op", std::string(to_string(op.kind))}};
  if (!op.section_id.empty()) j["section_id"] = op.section_id;
  if (!op.fact_id.empty()) j["fact_id"] = op.fact_id;
  if (op.kind == EditKind::add_section || op.kind == EditKind::rename_section) j["topic"] = op.topic;
  if (op.kind == EditKind::edit_text) {
    j["field"] = op.field;
    j["text"] = op.text;
  }
  if (op.position) j["position"] = *op.position;
  return j;
}

EditOp edit_from_json(const json& j) {
  if (!j.is_object()) invalid("edit op must be an object");
  auto name = j.find("op");
  if (name == j.end() || !name->is_string()) invalid("edit op needs an \"op\" string");
  auto kind = parse_edit_kind(name->get<std::string>());
  if (!kind) invalid(fmt::format("unknown edit op \"{}\"", name->get<std::string>()));
  EditOp op;
  op.kind = *kind;
  if (auto p = j.find("position"); p != j.end() && !p->is_null()) {
    if (!p->is_number_integer()) invalid("position must be an integer");
    op.position = p->get<std::int64_t>();
  }
  switch (op.kind) {
    case EditKind::add_section:
      op.topic = required_text(j, "topic", op.kind);
      break;
    case EditKind::delete_section:
      op.section_id = required_text(j, "section_id", op.kind);
      break;
    case EditKind::move_section:
      op.section_id = required_text(j, "section_id", op.kind);
      if (!op.position) invalid("move_section needs a position");
      break;
    case EditKind::rename_section:
      op.section_id = required_text(j, "section_id", op.kind);
      op.topic = required_text(j, "topic", op.kind);
      break;
    case EditKind::delete_fact:
      op.fact_id = required_text(j, "fact_id", op.kind);
      break;
    case EditKind::move_fact:
      op.fact_id = required_text(j, "fact_id", op.kind);
      op.section_id = required_text(j, "section_id", op.kind);
      break;
    case EditKind::reorder_fact:
      op.fact_id = required_text(j, "fact_id", op.kind);
      if (!op.position) invalid("reorder_fact needs a position");
      break;
    case EditKind::edit_text:
      op.field = required_text(j, "field", op.kind);
      op.text = required_text(j, "text", op.kind);
      if (op.field == "statement" || op.field == "chart_title") op.fact_id = required_text(j, "fact_id", op.kind);
      break;
  }
  return op;
}

void apply_edit(FactSheet& s, const EditOp& op) {
  FactSheet next = s;
  apply_to(next, op);
  next.revision += 1;
  relayout(next);
  s = std::move(next);
}

std::string insert_fact(FactSheet& s, FactCard card, std::string_view section_id) {
  auto i = section_index(s, std::string(section_id));
  if (i == 0) invalid("facts cannot be placed in the Introduction");
  std::string id;
  do {
    id = fmt::format("f{}", ++s.fact_counter);
  } while (s.facts.count(id));
  card.idea.id = id;
  s.facts.emplace(id, std::move(card));
  s.structure.sections[i].fact_ids.push_back(id);
  relayout(s);
  return id;
}

namespace {

using chart::Anchor;
using chart::Scene;
using chart::Shape;

constexpr const char* kInk = "#1f2d3d";
constexpr const char* kMuted = "#555555";
constexpr const char* kRule = "#d0d4d9";

Shape text_shape(std::string t, double x, double y, double size, const char* fill, std::string cls = {}) {
  Shape s;
  s.kind = Shape::Kind::text;
  s.text = std::move(t);
  s.x = x;
  s.y = y;
  s.font_size = size;
  s.fill = fill;
  s.cls = std::move(cls);
  return s;
}

Shape rule(double x, double y, double x2) {
  Shape s;
  s.kind = Shape::Kind::line;
  s.x = x;
  s.y = y;
  s.x2 = x2;
  s.y2 = y;
  s.stroke = kRule;
  s.stroke_width = 1;
  return s;
}

// Wrapped lines, the last one shortened with "..." when text is left over.
std::vector<std::string> clamp_lines(std::string_view t, double size, double width, std::size_t max_lines) {
  auto lines = chart::wrap_text(t, size, width);
  if (lines.size() > max_lines) {
    lines.resize(max_lines);
    lines.back() = chart::fit_text(lines.back() + " ...", size, width);
    if (lines.back().size() < 3 || lines.back().substr(lines.back().size() - 3) != "...")
      lines.back() = chart::fit_text(lines.back() + "...", size, width);
  }
  return lines;
}

void add_fact_card(Scene& scene, const FactCard& card, const layout::Rect& r, double dy) {
  const double x = static_cast<double>(r.x), y = static_cast<double>(r.y) + dy;
  Shape g;
  g.kind = Shape::Kind::group_begin;
  g.cls = "fact";
  g.id = "fact-" + card.idea.id;
  g.x = x;
  g.y = y;
  scene.shapes.push_back(g);

  Shape frame;
  frame.kind = Shape::Kind::rect;
  frame.x = 4;
  frame.y = 4;
  frame.w = static_cast<double>(r.w) - 8;
  frame.h = static_cast<double>(r.h) - 8;
  frame.fill = "#ffffff";
  frame.stroke = kRule;
  frame.stroke_width = 1;
  scene.shapes.push_back(frame);

  Shape cg;
  cg.kind = Shape::Kind::group_begin;
  cg.cls = "chart";
  cg.x = 10;
  cg.y = 8;
  cg.scale = kChartScale;
  scene.shapes.push_back(cg);
  auto rendered = chart::render(card.chart, card.table);
  for (auto& s : rendered.scene.shapes) scene.shapes.push_back(std::move(s));
  Shape end;
  end.kind = Shape::Kind::group_end;
  scene.shapes.push_back(end);

  const double text_x = 10 + chart::kWidth * kChartScale + 8;
  const double text_w = static_cast<double>(r.w) - text_x - 12;
  double ty = 20;
  for (auto& line : clamp_lines(card.statement, 9, text_w, 10)) {
    scene.shapes.push_back(text_shape(line, text_x, ty, 9, kInk, "statement"));
    ty += 11;
  }

  std::vector<std::pair<std::string, const char*>> qa_lines;
  for (const auto& qa : card.causal_qas) {
    for (auto& l : clamp_lines("Q: " + qa.question, 8, static_cast<double>(r.w) - 24, 2)) qa_lines.emplace_back(l, kInk);
    for (auto& l : clamp_lines("A: " + qa.answer, 8, static_cast<double>(r.w) - 24, 2)) qa_lines.emplace_back(l, kMuted);
  }
  double qy = 8 + chart::kHeight * kChartScale + 12;
  const double bottom = static_cast<double>(r.h) - 8;
  for (const auto& [line, color] : qa_lines) {
    if (qy > bottom) break;
    scene.shapes.push_back(text_shape(line, 12, qy, 8, color, "qa"));
    qy += 10;
  }
  scene.shapes.push_back(end);
}

}  // namespace

chart::Scene page_scene(const FactSheet& s) {
  auto page = layout::compose_page(s.plan, s.structure);
  Scene scene;
  scene.width = static_cast<double>(page.width);
  scene.height = kTitleBand + static_cast<double>(page.height) + 8;

  Shape bg;
  bg.kind = Shape::Kind::rect;
  bg.w = scene.width;
  bg.h = scene.height;
  bg.fill = "#ffffff";
  scene.shapes.push_back(bg);
  scene.shapes.push_back(text_shape(chart::fit_text(s.structure.title, 20, scene.width - 32), 16, 32, 20, kInk, "title"));
  scene.shapes.push_back(rule(16, kTitleBand - 6, scene.width - 16));

  for (const auto& sp : page.sections) {
    const Section* sec = s.structure.find_section(sp.section_id);
    const double x = static_cast<double>(sp.rect.x), y = kTitleBand + static_cast<double>(sp.rect.y);
    if (sec->id == kIntroductionId) {
      double ly = y + 12;
      for (auto& line : clamp_lines(s.structure.introduction, 9, static_cast<double>(sp.rect.w) - 24, 3)) {
        scene.shapes.push_back(text_shape(line, x + 12, ly, 9, kMuted, "introduction"));
        ly += 11;
      }
      continue;
    }
    scene.shapes.push_back(text_shape(chart::fit_text(sec->topic, 14, static_cast<double>(sp.rect.w) - 24), x + 12,
                                      y + 24, 14, kInk, "section"));
    scene.shapes.push_back(rule(x + 12, y + 32, x + static_cast<double>(sp.rect.w) - 12));
  }
  for (const auto& fp : page.facts) add_fact_card(scene, s.facts.at(fp.fact_id), fp.rect, kTitleBand);
  return scene;
}

std::string export_svg(const FactSheet& s) { return chart::to_svg(page_scene(s)); }

std::string export_pdf(const FactSheet& s) { return pdf::write(page_scene(s)); }

}  // namespace factflow::sheet
