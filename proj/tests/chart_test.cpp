#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "factflow/chart.hpp"
#include "factflow/error.hpp"
#include "factflow/rng.hpp"

using namespace factflow;
using namespace factflow::chart;
using sql::ResultTable;
using sql::SqlType;
using sql::Value;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

ResultTable category_table(std::size_t n) {
  ResultTable t;
  t.columns = {{"Brand", SqlType::text}, {"Total", SqlType::integer}};
  for (std::size_t i = 0; i < n; ++i) {
    t.rows.push_back({Value::text("b" + std::to_string(i)), Value::integer(static_cast<std::int64_t>(10 + i))});
  }
  return t;
}

ResultTable mixed_table() {
  ResultTable t;
  t.columns = {{"Brand", SqlType::text},
               {"Year", SqlType::integer},
               {"Sale", SqlType::real},
               {"Type", SqlType::text},
               {"Share", SqlType::real}};
  t.rows.push_back({Value::text("A"), Value::integer(2010), Value::real(3.5), Value::text("x"), Value::real(1)});
  t.rows.push_back({Value::text("B"), Value::integer(2011), Value::real(-1.5), Value::text("y"), Value::real(2)});
  t.rows.push_back({Value::text("C"), Value::integer(2012), Value::real(7.25), Value::text("x"), Value::real(3)});
  return t;
}

ChartParams params(ChartType type, std::string x, std::string y) {
  ChartParams p;
  p.chart_type = type;
  p.x_field = std::move(x);
  p.y_field = std::move(y);
  p.x_label = p.x_field;
  p.y_label = p.y_field;
  p.title = "t";
  return p;
}

bool has(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE_BEGIN("chart");

TEST_CASE("compatibility matrix") {
  const auto t = mixed_table();
  CHECK(validate_params(params(ChartType::bar, "Brand", "Sale"), t).empty());
  CHECK(validate_params(params(ChartType::bar, "Year", "Sale"), t).empty());
  CHECK(validate_params(params(ChartType::line, "Year", "Sale"), t).empty());
  CHECK(validate_params(params(ChartType::area, "Year", "Sale"), t).empty());
  CHECK(validate_params(params(ChartType::scatter, "Sale", "Share"), t).empty());
  CHECK(validate_params(params(ChartType::pie, "Brand", "Share"), t).empty());

  CHECK(has(validate_params(params(ChartType::scatter, "Sale", "Brand"), t), "scatter needs a numeric y"));
  CHECK(has(validate_params(params(ChartType::line, "Brand", "Sale"), t), "ordered numeric x"));
  CHECK(has(validate_params(params(ChartType::bar, "Sale", "Share"), t), "categorical or discrete x"));
  CHECK(has(validate_params(params(ChartType::pie, "Sale", "Share"), t), "pie needs one categorical"));
  CHECK(has(validate_params(params(ChartType::pie, "Brand", "Sale"), t), "non-negative"));
  CHECK(has(validate_params(params(ChartType::bar, "nosuch", "Sale"), t), "\"nosuch\" is not a column"));

  auto pie = params(ChartType::pie, "Brand", "Share");
  pie.color_field = "Type";
  CHECK(has(validate_params(pie, t), "pie admits no extra color channel"));
  pie.color_field = "Brand";
  CHECK(validate_params(pie, t).empty());

  auto scheme = params(ChartType::bar, "Brand", "Sale");
  scheme.color_scheme = "rainbow";
  CHECK(has(validate_params(scheme, t), "unknown color scheme"));
}

TEST_CASE("dimension cap holds for every chart type and encoding count") {
  const auto t = mixed_table();
  const std::vector<std::string> extras_pool = {"Type", "Share", "Year"};
  for (auto type : all_chart_types()) {
    for (int with_color = 0; with_color < 2; ++with_color) {
      for (std::size_t extras = 0; extras <= extras_pool.size(); ++extras) {
        ChartParams p = params(type, type == ChartType::scatter ? "Sale" : (type == ChartType::bar || type == ChartType::pie ? "Brand" : "Year"),
                               type == ChartType::pie ? "Share" : "Sale");
        if (with_color) p.color_field = type == ChartType::pie ? "Brand" : "Type";
        p.extra_fields.assign(extras_pool.begin(), extras_pool.begin() + static_cast<std::ptrdiff_t>(extras));
        const auto v = validate_params(p, t);
        const bool over = p.encoded_dimensions() > kMaxDimensions;
        CAPTURE(to_string(type));
        CAPTURE(p.encoded_dimensions());
        CHECK(has(v, "too many encoded dimensions") == over);
        if (over) CHECK_THROWS_AS(render(p, t), Error);
        if (p.encoded_dimensions() <= kMaxDimensions && v.empty()) CHECK_NOTHROW(render(p, t));
      }
    }
  }
}

TEST_CASE("bar marks and category cap") {
  auto three = render(params(ChartType::bar, "Brand", "Total"), category_table(3));
  CHECK(count(three.svg_text, "class=\"mark\"") == 3);
  CHECK(three.mark_count == 3);
  CHECK_FALSE(three.truncated);

  auto fifteen = render(params(ChartType::bar, "Brand", "Total"), category_table(15));
  CHECK(count(fifteen.svg_text, "class=\"mark\"") == 12);
  CHECK(fifteen.truncated);
  CHECK(fifteen.svg_text.find("top 12 of 15") != std::string::npos);
  // the three smallest values are the ones dropped
  CHECK(fifteen.svg_text.find(">b0<") == std::string::npos);
  CHECK(fifteen.svg_text.find(">b2<") == std::string::npos);
  CHECK(fifteen.svg_text.find(">b3<") != std::string::npos);
}

TEST_CASE("pie slice angles") {
  const auto a = pie_angles({1, 1, 2});
  REQUIRE(a.size() == 3);
  CHECK(a[0] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(a[2] == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK_THROWS_AS(pie_angles({1, -1}), Error);
  CHECK_THROWS_AS(pie_angles({0, 0}), Error);

  Rng rng(21, "pie");
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(1 + rng.below(20));
    for (auto& x : v) x = rng.uniform_real(0, 1e6);
    v[0] += 1;
    double sum = 0;
    for (double x : pie_angles(v)) sum += x;
    CHECK(std::fabs(sum - 2 * std::numbers::pi) < 1e-9);
  }

  ResultTable t;
  t.columns = {{"Type", SqlType::text}, {"n", SqlType::integer}};
  t.rows = {{Value::text("a"), Value::integer(1)}, {Value::text("b"), Value::integer(1)},
            {Value::text("c"), Value::integer(2)}};
  auto pie = render(params(ChartType::pie, "Type", "n"), t);
  CHECK(pie.mark_count == 3);
  CHECK(pie.svg_text.find("c (50%)") != std::string::npos);
  double swept = 0;
  for (const auto& s : pie.scene.shapes) {
    if (s.kind == Shape::Kind::wedge) swept += s.a1 - s.a0;
  }
  CHECK(std::fabs(swept - 2 * std::numbers::pi) < 1e-9);

  t.rows[0][1] = Value::integer(-1);
  CHECK_THROWS_AS(render(params(ChartType::pie, "Type", "n"), t), Error);
}

TEST_CASE("single slice pie is a full circle") {
  ResultTable t;
  t.columns = {{"Type", SqlType::text}, {"n", SqlType::integer}};
  t.rows = {{Value::text("all"), Value::integer(5)}};
  auto pie = render(params(ChartType::pie, "Type", "n"), t);
  CHECK(count(pie.svg_text, "<circle class=\"mark\"") == 1);
}

TEST_CASE("nice ticks") {
  CHECK(nice_ticks(0, 17) == std::vector<double>{0, 5, 10, 15, 20});
  CHECK(nice_ticks(0, 100) == std::vector<double>{0, 20, 40, 60, 80, 100});
  CHECK(nice_ticks(2010, 2019) == std::vector<double>{2010, 2012, 2014, 2016, 2018, 2020});
  CHECK(nice_ticks(0, 0.3) == std::vector<double>{0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3});
  CHECK(nice_ticks(5, 5).size() >= 4);

  Rng rng(22, "ticks");
  for (int trial = 0; trial < 3000; ++trial) {
    const double scale = std::pow(10.0, rng.uniform_real(-4, 9));
    double lo = rng.uniform_real(-1, 1) * scale;
    double hi = lo + rng.uniform01() * scale;
    const auto t = nice_ticks(lo, hi);
    CAPTURE(lo);
    CAPTURE(hi);
    REQUIRE(t.size() >= 4);
    CHECK(t.size() <= 7);
    CHECK(t.front() <= lo);
    CHECK(t.back() >= hi);
    const double step = t[1] - t[0];
    const double mant = step / std::pow(10.0, std::floor(std::log10(step) + 1e-9));
    CHECK((std::fabs(mant - 1) < 1e-6 || std::fabs(mant - 2) < 1e-6 || std::fabs(mant - 5) < 1e-6));
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(std::fabs((t[i] - t[i - 1]) - step) <= 1e-9 * std::fabs(step) * 10);
  }
}

TEST_CASE("plotted values stay within the axis") {
  Rng rng(23, "coverage");
  for (int trial = 0; trial < 300; ++trial) {
    ResultTable t;
    t.columns = {{"k", SqlType::text}, {"x", SqlType::integer}, {"y", SqlType::real}};
    const std::size_t n = 1 + rng.below(20);
    const double scale = std::pow(10.0, rng.uniform_real(-2, 7));
    for (std::size_t i = 0; i < n; ++i) {
      t.rows.push_back({Value::text("k" + std::to_string(i)), Value::integer(static_cast<std::int64_t>(2000 + i)),
                        Value::real(rng.uniform_real(-0.5, 1) * scale)});
    }
    for (auto type : {ChartType::bar, ChartType::line, ChartType::area, ChartType::scatter}) {
      auto p = params(type, type == ChartType::bar ? "k" : "x", "y");
      auto r = render(p, t);
      REQUIRE_FALSE(r.y_ticks.empty());
      for (double y : r.plotted_y) {
        CHECK(y >= r.y_ticks.front());
        CHECK(y <= r.y_ticks.back());
      }
    }
  }
}

TEST_CASE("output is byte-identical and well formed") {
  const auto t = mixed_table();
  for (auto type : all_chart_types()) {
    auto p = type == ChartType::pie ? params(type, "Brand", "Share")
                                    : params(type, type == ChartType::bar ? "Brand" : "Year", "Sale");
    p.title = "Sales & <share>";
    const auto first = render(p, t).svg_text;
    for (int i = 0; i < 5; ++i) CHECK(render(p, t).svg_text == first);
    CHECK(count(first, "<svg") == 1);
    CHECK(first.rfind("</svg>\n") == first.size() - 7);
    CHECK(first.find("Sales &amp; &lt;share&gt;") != std::string::npos);
    CHECK(first.find("height=\"180\"") != std::string::npos);
  }
}

TEST_CASE("colored bars and lines") {
  ResultTable t;
  t.columns = {{"Year", SqlType::integer}, {"Type", SqlType::text}, {"Sale", SqlType::integer}};
  for (int y = 2010; y < 2014; ++y) {
    t.rows.push_back({Value::integer(y), Value::text("Sedan"), Value::integer(y - 2000)});
    t.rows.push_back({Value::integer(y), Value::text("SUV"), Value::integer(2 * (y - 2000))});
  }
  auto bar = params(ChartType::bar, "Year", "Sale");
  bar.color_field = "Type";
  auto rb = render(bar, t);
  CHECK(rb.mark_count == 8);
  CHECK(count(rb.svg_text, "class=\"legend\"") == 2);

  auto line = params(ChartType::line, "Year", "Sale");
  line.color_field = "Type";
  auto rl = render(line, t);
  CHECK(count(rl.svg_text, "class=\"series\"") == 2);
  CHECK(rl.mark_count == 8);
}

TEST_CASE("render errors") {
  CHECK_THROWS_AS(render(params(ChartType::bar, "Brand", "Total"), category_table(0)), Error);
  ResultTable nulls;
  nulls.columns = {{"k", SqlType::text}, {"v", SqlType::integer}};
  nulls.rows = {{Value::text("a"), Value()}};
  CHECK_THROWS_AS(render(params(ChartType::bar, "k", "v"), nulls), Error);
}

TEST_CASE("text metrics") {
  CHECK(text_width("A", 10) == doctest::Approx(6.67));
  CHECK(text_width("Helvetica", 1000) == doctest::Approx(722 + 556 + 222 + 500 + 556 + 278 + 222 + 500 + 556));
  const auto lines = wrap_text("the quick brown fox jumps over the lazy dog", 10, 60);
  CHECK(lines.size() > 1);
  for (const auto& l : lines) CHECK(text_width(l, 10) <= 60);
  const auto cut = fit_text("a very long category label", 7, 40);
  CHECK(cut.size() < 26);
  CHECK(text_width(cut, 7) <= 40);
  CHECK(cut.substr(cut.size() - 3) == "...");
}

TEST_SUITE_END();
