#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factflow/model.hpp"
#include "factflow/sql.hpp"

namespace factflow::chart {

inline constexpr double kWidth = 360;
inline constexpr double kHeight = 180;
inline constexpr std::size_t kMaxDimensions = 3;
inline constexpr std::size_t kCategoryCap = 12;

// "categorical" (12 colors) or "sequential" (9 steps, light to dark).
// Empty for unknown names.
const std::vector<std::string>& palette(std::string_view name);

// Every violation of the encoding rules; empty when the params are usable.
std::vector<std::string> validate_params(const ChartParams& params, const sql::ResultTable& table);

// 1/2/5 x 10^k steps, 4 to 7 ticks, first <= lo and last >= hi.
std::vector<double> nice_ticks(double lo, double hi);

// Slice sweeps in radians, proportional to the values, summing to 2*pi.
std::vector<double> pie_angles(const std::vector<double>& values);

// Helvetica advance widths.
double text_width(std::string_view text, double font_size);
std::vector<std::string> wrap_text(std::string_view text, double font_size, double max_width);
// Shortens with a trailing "..." until the text fits.
std::string fit_text(std::string_view text, double font_size, double max_width);

// Drawing primitives shared by the SVG and PDF writers. Coordinates grow
// right and down.
enum class Anchor { start, middle, end };

struct Shape {
  enum class Kind { rect, line, polyline, polygon, circle, wedge, text, group_begin, group_end };
  Kind kind = Kind::rect;
  std::string cls;
  std::string id;
  double x = 0, y = 0, w = 0, h = 0;  // rect; line start; circle/wedge centre; text origin
  double x2 = 0, y2 = 0;              // line end
  double r = 0, a0 = 0, a1 = 0;       // circle/wedge radius; wedge angles (radians, clockwise from +x)
  std::vector<std::pair<double, double>> points;
  std::string fill = "none";
  std::string stroke = "none";
  double stroke_width = 0;
  double opacity = 1;  // fill opacity
  std::string text;
  double font_size = 0;
  Anchor anchor = Anchor::start;
  double rotate = 0;  // degrees, text only
  double scale = 1;   // group_begin: translate(x, y) scale(scale)
};

struct Scene {
  double width = kWidth;
  double height = kHeight;
  std::vector<Shape> shapes;
};

std::string svg_elements(const Scene& scene);  // body without the root element
std::string to_svg(const Scene& scene);
std::string xml_escape(std::string_view s);

struct RenderedChart {
  std::string svg_text;
  int width = static_cast<int>(kWidth);
  int height = static_cast<int>(kHeight);
  ChartParams params;
  Scene scene;
  std::vector<double> y_ticks;
  std::vector<double> plotted_y;  // y values drawn as marks, after truncation
  std::size_t mark_count = 0;
  bool truncated = false;
};

// Throws Error(validation) on violations, an empty table or negative pie
// values.
RenderedChart render(const ChartParams& params, const sql::ResultTable& table);

}  // namespace factflow::chart
