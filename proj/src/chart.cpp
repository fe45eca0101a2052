#include "factflow/chart.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include <fmt/format.h>

#include "factflow/error.hpp"
#include "factflow/text.hpp"

namespace factflow::chart {

namespace {

// Helvetica AFM advance widths for ' ' .. '~', in 1/1000 em.
constexpr std::array<int, 95> kHelvetica = {
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333, 278, 278,   // ' ' .. '/'
    556, 556, 556, 556, 556, 556, 556, 556, 556, 556,                                 // digits
    278, 278, 584, 584, 584, 556, 1015,                                               // ':' .. '@'
    667, 667, 722, 722, 667, 611, 778, 722, 278, 500, 667, 556, 833,                  // A .. M
    722, 778, 667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611,                  // N .. Z
    278, 278, 278, 469, 556, 333,                                                     // '[' .. '`'
    556, 556, 500, 556, 556, 278, 556, 556, 222, 222, 500, 222, 833,                  // a .. m
    556, 556, 556, 556, 333, 500, 278, 556, 500, 722, 500, 500, 500,                  // n .. z
    334, 260, 334, 584,                                                               // '{' .. '~'
};
constexpr int kFallbackWidth = 556;

constexpr double kPlotLeft = 48;
constexpr double kPlotRight = 350;
constexpr double kPlotTop = 24;
constexpr double kPlotBottom = 146;
constexpr double kPieCx = 120;
constexpr double kPieCy = 92;
constexpr double kPieRadius = 62;

const char* kInk = "#333333";
const char* kGrid = "#e3e3e3";

enum class FieldKind { missing, empty, text, integer, real };

FieldKind field_kind(const sql::ResultTable& table, const std::string& name) {
  auto idx = table.column_index(name);
  if (!idx) return FieldKind::missing;
  switch (table.columns[*idx].type) {
    case sql::SqlType::text:
      return FieldKind::text;
    case sql::SqlType::integer:
      return FieldKind::integer;
    case sql::SqlType::real:
      return FieldKind::real;
    case sql::SqlType::null:
      break;
  }
  return FieldKind::empty;
}

bool numeric(FieldKind k) { return k == FieldKind::integer || k == FieldKind::real; }
bool categorical(FieldKind k) { return k == FieldKind::text || k == FieldKind::integer; }

std::optional<double> number_of(const sql::Value& v) {
  if (!v.is_numeric()) return std::nullopt;
  return v.as_real();
}

std::string label_of(const sql::Value& v) { return v.is_null() ? std::string("(none)") : sql::display_value(v); }

double pow10i(int k) {
  double p = 1;
  for (int i = 0; i < std::abs(k); ++i) p *= 10;
  return p;
}

// tick i * m * 10^k, computed so that decimal steps land on the nearest double
double tick_value(std::int64_t i, int m, int k) {
  const double units = static_cast<double>(i * m);
  return k >= 0 ? units * pow10i(k) : units / pow10i(k);
}

std::string format_tick(double v, double step, bool compact) {
  const double a = std::fabs(v);
  if (compact && step >= 1000) {
    static constexpr std::array<std::pair<double, const char*>, 3> kUnits = {
        {{1e9, "B"}, {1e6, "M"}, {1e3, "k"}}};
    for (const auto& [scale, suffix] : kUnits) {
      if (step >= scale || (a >= scale * 10 && step >= scale / 10)) {
        const double s = step / scale;
        const int dec = s >= 1 ? 0 : static_cast<int>(std::ceil(-std::log10(s) - 1e-9));
        return fmt::format("{:.{}f}{}", v / scale, dec, suffix);
      }
    }
  }
  const int dec = step >= 1 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  std::string s = fmt::format("{:.{}f}", v, dec);
  if (s == "-0") s = "0";
  return s;
}

struct Builder {
  Scene scene;

  void text(double x, double y, std::string s, double size, Anchor anchor, std::string cls = {},
            double rotate = 0, std::string fill = kInk) {
    Shape t;
    t.kind = Shape::Kind::text;
    t.x = x;
    t.y = y;
    t.text = std::move(s);
    t.font_size = size;
    t.anchor = anchor;
    t.cls = std::move(cls);
    t.rotate = rotate;
    t.fill = std::move(fill);
    scene.shapes.push_back(std::move(t));
  }

  void line(double x1, double y1, double x2, double y2, std::string stroke, double width, std::string cls = {}) {
    Shape l;
    l.kind = Shape::Kind::line;
    l.x = x1;
    l.y = y1;
    l.x2 = x2;
    l.y2 = y2;
    l.stroke = std::move(stroke);
    l.stroke_width = width;
    l.cls = std::move(cls);
    scene.shapes.push_back(std::move(l));
  }

  void rect(double x, double y, double w, double h, std::string fill, std::string cls = {}) {
    Shape r;
    r.kind = Shape::Kind::rect;
    r.x = x;
    r.y = y;
    r.w = w;
    r.h = h;
    r.fill = std::move(fill);
    r.cls = std::move(cls);
    scene.shapes.push_back(std::move(r));
  }

  void circle(double cx, double cy, double radius, std::string fill, std::string cls = {}) {
    Shape c;
    c.kind = Shape::Kind::circle;
    c.x = cx;
    c.y = cy;
    c.r = radius;
    c.fill = std::move(fill);
    c.cls = std::move(cls);
    scene.shapes.push_back(std::move(c));
  }

  void path(Shape::Kind kind, std::vector<std::pair<double, double>> pts, std::string fill, std::string stroke,
            double width, std::string cls) {
    Shape p;
    p.kind = kind;
    p.points = std::move(pts);
    p.fill = std::move(fill);
    p.stroke = std::move(stroke);
    p.stroke_width = width;
    p.cls = std::move(cls);
    scene.shapes.push_back(std::move(p));
  }
};

struct Axis {
  std::vector<double> ticks;
  double lo = 0, hi = 1;
  double step = 1;

  explicit Axis(std::vector<double> t) : ticks(std::move(t)) {
    lo = ticks.front();
    hi = ticks.back();
    step = ticks.size() > 1 ? ticks[1] - ticks[0] : 1;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

void draw_frame(Builder& b, const ChartParams& p) {
  b.text(kWidth / 2, 13, fit_text(p.title, 10, kWidth - 8), 10, Anchor::middle, "title");
  // Slices are labelled by the legend; a pie has no axes to title.
  if (p.chart_type == ChartType::pie) return;
  b.text((kPlotLeft + kPlotRight) / 2, 175, fit_text(p.x_label, 8, kPlotRight - kPlotLeft), 8, Anchor::middle,
         "x-label");
  b.text(10, (kPlotTop + kPlotBottom) / 2, fit_text(p.y_label, 8, kPlotBottom - kPlotTop), 8, Anchor::middle,
         "y-label", -90);
}

void draw_y_axis(Builder& b, const Axis& y) {
  for (double t : y.ticks) {
    const double py = y.map(t, kPlotBottom, kPlotTop);
    b.line(kPlotLeft, py, kPlotRight, py, kGrid, 0.5, "grid");
    b.text(kPlotLeft - 4, py + 2.5, format_tick(t, y.step, true), 7, Anchor::end, "tick");
  }
  b.line(kPlotLeft, kPlotBottom, kPlotRight, kPlotBottom, kInk, 0.8, "axis");
}

void draw_x_numeric(Builder& b, const Axis& x) {
  for (double t : x.ticks) {
    const double px = x.map(t, kPlotLeft, kPlotRight);
    b.line(px, kPlotBottom, px, kPlotBottom + 3, kInk, 0.8, "tick-mark");
    b.text(px, kPlotBottom + 12, format_tick(t, x.step, false), 7, Anchor::middle, "tick");
  }
}

void draw_legend(Builder& b, const std::vector<std::string>& names, const std::vector<std::string>& colors,
                 double x, double y, double max_width) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double row = y + static_cast<double>(i) * 9;
    b.rect(x, row - 6, 6, 6, colors[i], "legend-swatch");
    b.text(x + 9, row, fit_text(names[i], 7, max_width - 9), 7, Anchor::start, "legend");
  }
}

const std::string& series_color(const ChartParams& p, std::size_t i, std::size_t n) {
  const auto& pal = palette(p.color_scheme);
  if (p.color_scheme == "sequential") {
    if (n <= 1) return pal[6];
    const std::size_t idx = 2 + (i * (pal.size() - 3)) / (n - 1);
    return pal[std::min(idx, pal.size() - 1)];
  }
  return pal[i % pal.size()];
}

// Keeps the first kCategoryCap keys by descending weight (stable), in that
// order; returns every key unchanged when under the cap.
std::vector<std::size_t> cap_categories(const std::vector<double>& weights, bool& truncated) {
  std::vector<std::size_t> idx(weights.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  truncated = weights.size() > kCategoryCap;
  if (!truncated) return idx;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  idx.resize(kCategoryCap);
  return idx;
}

struct Item {
  std::string label;
  std::string series;
  double x = 0;
  double y = 0;
};

void render_bar(Builder& b, const ChartParams& p, const sql::ResultTable& t, RenderedChart& out) {
  const std::size_t xi = *t.column_index(p.x_field);
  const std::size_t yi = *t.column_index(p.y_field);
  const auto ci = p.color_field ? t.column_index(*p.color_field) : std::nullopt;

  // categories in first-seen order, series likewise
  std::vector<std::string> cats;
  std::map<std::string, std::size_t> cat_index;
  std::vector<std::string> series;
  std::map<std::string, std::size_t> series_index;
  std::vector<Item> items;
  std::vector<double> weight;
  for (const auto& row : t.rows) {
    auto y = number_of(row[yi]);
    if (!y) continue;
    Item it;
    it.label = label_of(row[xi]);
    it.series = ci ? label_of(row[*ci]) : std::string();
    it.y = *y;
    if (!ci) {
      // one mark per row; duplicate labels stay separate bars
      cats.push_back(it.label);
      weight.push_back(std::fabs(it.y));
      it.x = static_cast<double>(cats.size() - 1);
    } else {
      auto [pos, fresh] = cat_index.emplace(it.label, cats.size());
      if (fresh) {
        cats.push_back(it.label);
        weight.push_back(0);
      }
      weight[pos->second] += std::fabs(it.y);
      it.x = static_cast<double>(pos->second);
      if (series_index.emplace(it.series, series.size()).second) series.push_back(it.series);
    }
    items.push_back(std::move(it));
  }

  if (items.empty()) throw Error(ErrorKind::validation, "no plottable rows: every value is null");
  bool truncated = false;
  const auto kept = cap_categories(weight, truncated);
  std::vector<std::ptrdiff_t> slot(cats.size(), -1);
  for (std::size_t i = 0; i < kept.size(); ++i) slot[kept[i]] = static_cast<std::ptrdiff_t>(i);
  if (series.size() > kCategoryCap) series.resize(kCategoryCap);

  double lo = 0, hi = 0;
  std::vector<const Item*> drawn;
  for (const auto& it : items) {
    if (slot[static_cast<std::size_t>(it.x)] < 0) continue;
    if (ci && !series_index.count(it.series)) continue;
    if (ci && series_index.at(it.series) >= series.size()) continue;
    drawn.push_back(&it);
    lo = std::min(lo, it.y);
    hi = std::max(hi, it.y);
  }
  const Axis y(nice_ticks(lo, hi));
  draw_y_axis(b, y);

  const double band = (kPlotRight - kPlotLeft) / static_cast<double>(kept.size());
  const std::size_t groups = ci ? std::max<std::size_t>(series.size(), 1) : 1;
  const double inner = band * 0.7;
  const double bar_w = inner / static_cast<double>(groups);
  for (const Item* it : drawn) {
    const auto pos = static_cast<double>(slot[static_cast<std::size_t>(it->x)]);
    const std::size_t s = ci ? series_index.at(it->series) : 0;
    const double x0 = kPlotLeft + pos * band + band * 0.15 + static_cast<double>(s) * bar_w;
    const double y_top = y.map(std::max(it->y, 0.0), kPlotBottom, kPlotTop);
    const double y_bot = y.map(std::min(it->y, 0.0), kPlotBottom, kPlotTop);
    b.rect(x0, y_top, bar_w, y_bot - y_top, ci ? series_color(p, s, series.size()) : series_color(p, 0, 1), "mark");
    out.plotted_y.push_back(it->y);
    ++out.mark_count;
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double cx = kPlotLeft + (static_cast<double>(i) + 0.5) * band;
    b.text(cx, kPlotBottom + 10, fit_text(cats[kept[i]], 7, band - 2), 7, Anchor::middle, "category");
  }
  if (ci) {
    std::vector<std::string> colors;
    for (std::size_t s = 0; s < series.size(); ++s) colors.push_back(series_color(p, s, series.size()));
    draw_legend(b, series, colors, kPlotRight - 70, kPlotTop + 8, 70);
  }
  out.truncated = truncated;
  if (truncated) {
    b.text(kPlotRight, 175, fmt::format("top {} of {}", kCategoryCap, cats.size()), 7, Anchor::end, "note");
  }
  out.y_ticks = y.ticks;
}

void render_xy(Builder& b, const ChartParams& p, const sql::ResultTable& t, RenderedChart& out) {
  const std::size_t xi = *t.column_index(p.x_field);
  const std::size_t yi = *t.column_index(p.y_field);
  const auto ci = p.color_field ? t.column_index(*p.color_field) : std::nullopt;
  const bool area = p.chart_type == ChartType::area;
  const bool scatter = p.chart_type == ChartType::scatter;

  std::vector<std::string> series;
  std::map<std::string, std::size_t> series_index;
  std::vector<Item> items;
  for (const auto& row : t.rows) {
    auto x = number_of(row[xi]);
    auto y = number_of(row[yi]);
    if (!x || !y) continue;
    Item it;
    it.x = *x;
    it.y = *y;
    it.series = ci ? label_of(row[*ci]) : std::string();
    if (series_index.emplace(it.series, series.size()).second) series.push_back(it.series);
    items.push_back(std::move(it));
  }
  if (items.empty()) throw Error(ErrorKind::validation, "no plottable rows: every value is null");
  bool truncated = series.size() > kCategoryCap;
  if (truncated) series.resize(kCategoryCap);

  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  std::vector<const Item*> drawn;
  for (const auto& it : items) {
    if (series_index.at(it.series) >= series.size()) continue;
    drawn.push_back(&it);
    xlo = std::min(xlo, it.x);
    xhi = std::max(xhi, it.x);
    ylo = std::min(ylo, it.y);
    yhi = std::max(yhi, it.y);
  }
  if (area) {
    ylo = std::min(ylo, 0.0);
    yhi = std::max(yhi, 0.0);
  }
  const Axis x(nice_ticks(xlo, xhi));
  const Axis y(nice_ticks(ylo, yhi));
  draw_y_axis(b, y);
  draw_x_numeric(b, x);

  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<const Item*> pts;
    for (const Item* it : drawn) {
      if (series_index.at(it->series) == s) pts.push_back(it);
    }
    if (!scatter) {
      std::stable_sort(pts.begin(), pts.end(), [](const Item* a, const Item* c) { return a->x < c->x; });
    }
    const std::string& color = series_color(p, s, series.size());
    std::vector<std::pair<double, double>> line;
    for (const Item* it : pts) line.emplace_back(x.map(it->x, kPlotLeft, kPlotRight), y.map(it->y, kPlotBottom, kPlotTop));
    if (area && !line.empty()) {
      const double base = y.map(std::clamp(0.0, y.lo, y.hi), kPlotBottom, kPlotTop);
      auto poly = line;
      poly.emplace_back(line.back().first, base);
      poly.emplace_back(line.front().first, base);
      b.path(Shape::Kind::polygon, std::move(poly), color, "none", 0, "area");
      b.scene.shapes.back().opacity = 0.35;
    }
    if (!scatter && line.size() > 1) b.path(Shape::Kind::polyline, line, "none", color, 1.5, "series");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      b.circle(line[i].first, line[i].second, scatter ? 3 : 2, color, "mark");
      out.plotted_y.push_back(pts[i]->y);
      ++out.mark_count;
    }
  }
  if (ci) {
    std::vector<std::string> colors;
    for (std::size_t s = 0; s < series.size(); ++s) colors.push_back(series_color(p, s, series.size()));
    draw_legend(b, series, colors, kPlotRight - 70, kPlotTop + 8, 70);
  }
  out.truncated = truncated;
  if (truncated) {
    b.text(kPlotRight, 175, fmt::format("top {} of {}", kCategoryCap, series_index.size()), 7, Anchor::end,
           "note");
  }
  out.y_ticks = y.ticks;
}

void render_pie(Builder& b, const ChartParams& p, const sql::ResultTable& t, RenderedChart& out) {
  const std::size_t xi = *t.column_index(p.x_field);
  const std::size_t yi = *t.column_index(p.y_field);
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& row : t.rows) {
    auto y = number_of(row[yi]);
    if (!y) continue;
    labels.push_back(label_of(row[xi]));
    values.push_back(*y);
  }
  bool truncated = false;
  const auto kept = cap_categories(values, truncated);
  std::vector<double> kept_values;
  for (auto i : kept) kept_values.push_back(values[i]);
  const auto sweeps = pie_angles(kept_values);
  double total = 0;
  for (double v : kept_values) total += v;

  double angle = -std::numbers::pi / 2;
  std::vector<std::string> names, colors;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Shape w;
    w.kind = Shape::Kind::wedge;
    w.cls = "mark";
    w.x = kPieCx;
    w.y = kPieCy;
    w.r = kPieRadius;
    w.a0 = angle;
    w.a1 = angle + sweeps[i];
    w.fill = series_color(p, i, kept.size());
    w.stroke = "#ffffff";
    w.stroke_width = 0.8;
    angle = w.a1;
    b.scene.shapes.push_back(std::move(w));
    out.plotted_y.push_back(kept_values[i]);
    ++out.mark_count;
    names.push_back(fmt::format("{} ({}%)", labels[kept[i]], text::format_display(std::round(1000.0 * kept_values[i] / total) / 10)));
    colors.push_back(series_color(p, i, kept.size()));
  }
  draw_legend(b, names, colors, 200, 40, kWidth - 204);
  out.truncated = truncated;
  if (truncated) {
    b.text(kWidth - 4, 175, fmt::format("top {} of {}", kCategoryCap, values.size()), 7, Anchor::end, "note");
  }
}

std::string attr_fill_stroke(const Shape& s) {
  std::string out = fmt::format(" fill=\"{}\"", s.fill);
  if (s.stroke != "none") {
    out += fmt::format(" stroke=\"{}\" stroke-width=\"{}\"", s.stroke, text::format_coord(s.stroke_width));
  }
  return out;
}

std::string attr_class(const Shape& s) {
  std::string out;
  if (!s.cls.empty()) out += fmt::format(" class=\"{}\"", s.cls);
  if (!s.id.empty()) out += fmt::format(" id=\"{}\"", xml_escape(s.id));
  return out;
}

std::string points_attr(const std::vector<std::pair<double, double>>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += text::format_coord(pts[i].first) + "," + text::format_coord(pts[i].second);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& palette(std::string_view name) {
  static const std::vector<std::string> categorical = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                                       "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
                                                       "#9c755f", "#bab0ac", "#1f77b4", "#17becf"};
  static const std::vector<std::string> sequential = {"#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6",
                                                      "#4292c6", "#2171b5", "#08519c", "#08306b"};
  static const std::vector<std::string> none;
  if (name == "categorical") return categorical;
  if (name == "sequential") return sequential;
  return none;
}

std::vector<std::string> validate_params(const ChartParams& p, const sql::ResultTable& table) {
  std::vector<std::string> v;
  const std::size_t dims = p.encoded_dimensions();
  if (dims > kMaxDimensions) {
    v.push_back(fmt::format("too many encoded dimensions: {} (at most {}: x, y and color)", dims, kMaxDimensions));
  }
  if (palette(p.color_scheme).empty()) {
    v.push_back(fmt::format("unknown color scheme \"{}\" (use categorical or sequential)", p.color_scheme));
  }

  auto check_field = [&](const std::string& role, const std::string& name) -> FieldKind {
    if (name.empty()) {
      v.push_back(fmt::format("{} field is empty", role));
      return FieldKind::missing;
    }
    const FieldKind k = field_kind(table, name);
    if (k == FieldKind::missing) v.push_back(fmt::format("{} field \"{}\" is not a column of the result", role, name));
    if (k == FieldKind::empty) v.push_back(fmt::format("{} field \"{}\" has no values", role, name));
    return k;
  };
  const FieldKind x = check_field("x", p.x_field);
  const FieldKind y = check_field("y", p.y_field);
  std::optional<FieldKind> color;
  if (p.color_field) color = check_field("color", *p.color_field);
  for (const auto& extra : p.extra_fields) check_field("extra", extra);

  auto known = [](FieldKind k) { return k != FieldKind::missing && k != FieldKind::empty; };
  const std::string type(to_string(p.chart_type));
  switch (p.chart_type) {
    case ChartType::line:
    case ChartType::area:
      if (known(x) && !numeric(x)) v.push_back(fmt::format("{} needs an ordered numeric x field", type));
      if (known(y) && !numeric(y)) v.push_back(fmt::format("{} needs a numeric y field", type));
      if (color && known(*color) && !categorical(*color)) {
        v.push_back(fmt::format("{} color field must be categorical", type));
      }
      break;
    case ChartType::bar:
      if (known(x) && !categorical(x)) v.push_back("bar needs a categorical or discrete x field");
      if (known(y) && !numeric(y)) v.push_back("bar needs a numeric y field");
      if (color && known(*color) && !categorical(*color)) v.push_back("bar color field must be categorical");
      break;
    case ChartType::scatter:
      if (known(x) && !numeric(x)) v.push_back("scatter needs a numeric x field");
      if (known(y) && !numeric(y)) v.push_back("scatter needs a numeric y field");
      break;
    case ChartType::pie:
      if (known(x) && x != FieldKind::text) v.push_back("pie needs one categorical field for its slices");
      if (known(y) && !numeric(y)) v.push_back("pie needs a numeric y field");
      if (p.color_field && *p.color_field != p.x_field) v.push_back("pie admits no extra color channel");
      if (!p.extra_fields.empty()) v.push_back("pie admits no extra encodings");
      if (known(y) && numeric(y)) {
        const std::size_t yi = *table.column_index(p.y_field);
        double total = 0;
        bool negative = false;
        for (const auto& row : table.rows) {
          if (auto n = number_of(row[yi])) {
            negative = negative || *n < 0;
            total += *n;
          }
        }
        if (negative) v.push_back("pie values must be non-negative");
        else if (!(total > 0)) v.push_back("pie values sum to zero");
      }
      break;
  }
  return v;
}

std::vector<double> nice_ticks(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorKind::validation, "axis range is not finite");
  }
  if (hi < lo) std::swap(lo, hi);
  if (hi == lo) {
    const double pad = std::max(1.0, std::fabs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
  static constexpr int kMultipliers[] = {1, 2, 5};
  const int k0 = static_cast<int>(std::floor(std::log10(hi - lo))) - 2;
  for (int k = k0;; ++k) {
    for (int m : kMultipliers) {
      const double step = tick_value(1, m, k);
      auto i0 = static_cast<std::int64_t>(std::floor(lo / step));
      auto i1 = static_cast<std::int64_t>(std::ceil(hi / step));
      while (tick_value(i0, m, k) > lo) --i0;
      while (tick_value(i1, m, k) < hi) ++i1;
      if (i1 - i0 + 1 > 7) continue;
      if (i1 - i0 + 1 < 4) i1 = i0 + 3;
      std::vector<double> ticks;
      for (auto i = i0; i <= i1; ++i) ticks.push_back(tick_value(i, m, k));
      return ticks;
    }
  }
}

std::vector<double> pie_angles(const std::vector<double>& values) {
  double total = 0;
  for (double v : values) {
    if (v < 0) throw Error(ErrorKind::validation, "pie values must be non-negative");
    total += v;
  }
  if (!(total > 0)) throw Error(ErrorKind::validation, "pie values sum to zero");
  std::vector<double> out;
  for (double v : values) out.push_back(2 * std::numbers::pi * (v / total));
  return out;
}

double text_width(std::string_view s, double font_size) {
  long units = 0;
  for (unsigned char c : s) {
    if (c >= 32 && c <= 126) {
      units += kHelvetica[c - 32];
    } else if ((c & 0xC0) != 0x80) {
      units += kFallbackWidth;  // lead byte of a multi-byte character or control
    }
  }
  return static_cast<double>(units) * font_size / 1000.0;
}

std::vector<std::string> wrap_text(std::string_view s, double font_size, double max_width) {
  std::vector<std::string> lines;
  std::string current;
  for (const auto& word : text::split(s, ' ')) {
    if (word.empty()) continue;
    const std::string candidate = current.empty() ? word : current + " " + word;
    if (!current.empty() && text_width(candidate, font_size) > max_width) {
      lines.push_back(current);
      current = word;
    } else {
      current = candidate;
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::string fit_text(std::string_view s, double font_size, double max_width) {
  if (text_width(s, font_size) <= max_width) return std::string(s);
  std::string cut(s);
  while (!cut.empty()) {
    cut.pop_back();
    while (!cut.empty() && (static_cast<unsigned char>(cut.back()) & 0xC0) == 0x80) cut.pop_back();
    if (!cut.empty() && (static_cast<unsigned char>(cut.back()) & 0x80)) {
      cut.pop_back();  // drop a dangling lead byte
    }
    if (text_width(cut + "...", font_size) <= max_width) return cut + "...";
  }
  return "";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_elements(const Scene& scene) {
  using text::format_coord;
  std::string out;
  for (const auto& s : scene.shapes) {
    switch (s.kind) {
      case Shape::Kind::rect:
        out += fmt::format("<rect{} x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"{}/>\n", attr_class(s),
                           format_coord(s.x), format_coord(s.y), format_coord(s.w), format_coord(s.h),
                           attr_fill_stroke(s));
        break;
      case Shape::Kind::line:
        out += fmt::format("<line{} x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
                           attr_class(s), format_coord(s.x), format_coord(s.y), format_coord(s.x2),
                           format_coord(s.y2), s.stroke, format_coord(s.stroke_width));
        break;
      case Shape::Kind::polyline:
      case Shape::Kind::polygon: {
        std::string opacity;
        if (s.opacity < 1) opacity = fmt::format(" fill-opacity=\"{}\"", format_coord(s.opacity));
        out += fmt::format("<{}{} points=\"{}\"{}{}/>\n", s.kind == Shape::Kind::polygon ? "polygon" : "polyline",
                           attr_class(s), points_attr(s.points), attr_fill_stroke(s), opacity);
        break;
      }
      case Shape::Kind::circle:
        out += fmt::format("<circle{} cx=\"{}\" cy=\"{}\" r=\"{}\"{}/>\n", attr_class(s), format_coord(s.x),
                           format_coord(s.y), format_coord(s.r), attr_fill_stroke(s));
        break;
      case Shape::Kind::wedge: {
        const double sweep = s.a1 - s.a0;
        if (sweep >= 2 * std::numbers::pi - 1e-9) {
          out += fmt::format("<circle{} cx=\"{}\" cy=\"{}\" r=\"{}\"{}/>\n", attr_class(s), format_coord(s.x),
                             format_coord(s.y), format_coord(s.r), attr_fill_stroke(s));
          break;
        }
        const double x0 = s.x + s.r * std::cos(s.a0), y0 = s.y + s.r * std::sin(s.a0);
        const double x1 = s.x + s.r * std::cos(s.a1), y1 = s.y + s.r * std::sin(s.a1);
        out += fmt::format("<path{} d=\"M{} {} L{} {} A{} {} 0 {} 1 {} {} Z\"{}/>\n", attr_class(s),
                           format_coord(s.x), format_coord(s.y), format_coord(x0), format_coord(y0),
                           format_coord(s.r), format_coord(s.r), sweep > std::numbers::pi ? 1 : 0, format_coord(x1),
                           format_coord(y1), attr_fill_stroke(s));
        break;
      }
      case Shape::Kind::text: {
        static constexpr const char* kAnchor[] = {"start", "middle", "end"};
        std::string transform;
        if (s.rotate != 0) {
          transform = fmt::format(" transform=\"rotate({} {} {})\"", format_coord(s.rotate), format_coord(s.x),
                                  format_coord(s.y));
        }
        out += fmt::format("<text{} x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{}\" fill=\"{}\"{}>{}</text>\n",
                           attr_class(s), format_coord(s.x), format_coord(s.y), format_coord(s.font_size),
                           kAnchor[static_cast<int>(s.anchor)], s.fill, transform, xml_escape(s.text));
        break;
      }
      case Shape::Kind::group_begin:
        out += fmt::format("<g{} transform=\"translate({} {}) scale({})\">\n", attr_class(s), format_coord(s.x),
                           format_coord(s.y), format_coord(s.scale));
        break;
      case Shape::Kind::group_end:
        out += "</g>\n";
        break;
    }
  }
  return out;
}

std::string to_svg(const Scene& scene) {
  return fmt::format(
             "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
             "viewBox=\"0 0 {0} {1}\" font-family=\"Helvetica, Arial, sans-serif\">\n",
             text::format_coord(scene.width), text::format_coord(scene.height)) +
         svg_elements(scene) + "</svg>\n";
}

RenderedChart render(const ChartParams& params, const sql::ResultTable& table) {
  if (table.rows.empty()) throw Error(ErrorKind::validation, "cannot chart an empty result");
  auto violations = validate_params(params, table);
  if (!violations.empty()) {
    throw Error(ErrorKind::validation, "chart parameters rejected: " + text::join(violations, "; "));
  }
  RenderedChart out;
  out.params = params;
  Builder b;
  draw_frame(b, params);
  switch (params.chart_type) {
    case ChartType::bar:
      render_bar(b, params, table, out);
      break;
    case ChartType::line:
    case ChartType::area:
    case ChartType::scatter:
      render_xy(b, params, table, out);
      break;
    case ChartType::pie:
      render_pie(b, params, table, out);
      break;
  }
  if (out.mark_count == 0) throw Error(ErrorKind::validation, "no plottable rows: every value is null");
  out.scene = std::move(b.scene);
  out.svg_text = to_svg(out.scene);
  return out;
}

}  // namespace factflow::chart
