#include "factflow/pdf.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "factflow/text.hpp"

namespace factflow::pdf {

using chart::Shape;

namespace {

std::string num(double v) {
  if (std::abs(v) < 0.005) return "0";
  return text::format_coord(v);
}

struct Rgb {
  double r = 0, g = 0, b = 0;
};

std::optional<Rgb> parse_color(std::string_view c) {
  if (c.size() != 7 || c[0] != '#') return std::nullopt;
  auto hex = [&](std::size_t i) { return std::stoi(std::string(c.substr(i, 2)), nullptr, 16) / 255.0; };
  return Rgb{hex(1), hex(3), hex(5)};
}

std::string rgb(const Rgb& c) { return fmt::format("{} {} {}", num(c.r), num(c.g), num(c.b)); }

// Code points 0x80-0x9f of WinAnsi.
std::optional<unsigned char> win_ansi_high(char32_t cp) {
  static const std::map<char32_t, unsigned char> kTable = {
      {0x20ac, 0x80}, {0x201a, 0x82}, {0x0192, 0x83}, {0x201e, 0x84}, {0x2026, 0x85}, {0x2020, 0x86},
      {0x2021, 0x87}, {0x02c6, 0x88}, {0x2030, 0x89}, {0x0160, 0x8a}, {0x2039, 0x8b}, {0x0152, 0x8c},
      {0x017d, 0x8e}, {0x2018, 0x91}, {0x2019, 0x92}, {0x201c, 0x93}, {0x201d, 0x94}, {0x2022, 0x95},
      {0x2013, 0x96}, {0x2014, 0x97}, {0x02dc, 0x98}, {0x2122, 0x99}, {0x0161, 0x9a}, {0x203a, 0x9b},
      {0x0153, 0x9c}, {0x017e, 0x9e}, {0x0178, 0x9f}};
  auto it = kTable.find(cp);
  if (it == kTable.end()) return std::nullopt;
  return it->second;
}

std::string pdf_string(std::string_view utf8) {
  std::string out = "(";
  for (unsigned char c : to_win_ansi(utf8)) {
    if (c == '(' || c == ')' || c == '\\') {
      out += '\\';
      out += static_cast<char>(c);
    } else if (c < 0x20 || c >= 0x7f) {
      out += fmt::format("\\{:03o}", c);
    } else {
      out += static_cast<char>(c);
    }
  }
  return out + ")";
}

// Cubic segments approximating a clockwise (in y-down space) arc.
void arc(std::string& out, double cx, double cy, double r, double a0, double a1) {
  int n = std::max(1, static_cast<int>(std::ceil((a1 - a0) / (std::numbers::pi / 2) - 1e-9)));
  double step = (a1 - a0) / n;
  double k = 4.0 / 3.0 * std::tan(step / 4);
  for (int i = 0; i < n; ++i) {
    double s = a0 + step * i, e = s + step;
    double x0 = cx + r * std::cos(s), y0 = cy + r * std::sin(s);
    double x3 = cx + r * std::cos(e), y3 = cy + r * std::sin(e);
    double x1 = x0 - k * r * std::sin(s), y1 = y0 + k * r * std::cos(s);
    double x2 = x3 + k * r * std::sin(e), y2 = y3 - k * r * std::cos(e);
    out += fmt::format("{} {} {} {} {} {} c\n", num(x1), num(y1), num(x2), num(y2), num(x3), num(y3));
  }
}

class ContentWriter {
 public:
  std::string body;
  std::map<std::string, std::string> alpha_states;  // opacity -> resource name

  void shape(const Shape& s) {
    std::string path;
    bool closed = true;
    switch (s.kind) {
      case Shape::Kind::rect:
        path = fmt::format("{} {} {} {} re\n", num(s.x), num(s.y), num(s.w), num(s.h));
        break;
      case Shape::Kind::line:
        path = fmt::format("{} {} m {} {} l\n", num(s.x), num(s.y), num(s.x2), num(s.y2));
        closed = false;
        break;
      case Shape::Kind::polyline:
      case Shape::Kind::polygon:
        if (s.points.empty()) return;
        path = fmt::format("{} {} m\n", num(s.points[0].first), num(s.points[0].second));
        for (std::size_t i = 1; i < s.points.size(); ++i)
          path += fmt::format("{} {} l\n", num(s.points[i].first), num(s.points[i].second));
        closed = s.kind == Shape::Kind::polygon;
        break;
      case Shape::Kind::circle:
        path = fmt::format("{} {} m\n", num(s.x + s.r), num(s.y));
        arc(path, s.x, s.y, s.r, 0, 2 * std::numbers::pi);
        break;
      case Shape::Kind::wedge:
        if (s.a1 - s.a0 >= 2 * std::numbers::pi - 1e-9) {
          path = fmt::format("{} {} m\n", num(s.x + s.r), num(s.y));
          arc(path, s.x, s.y, s.r, 0, 2 * std::numbers::pi);
        } else {
          path = fmt::format("{} {} m {} {} l\n", num(s.x), num(s.y), num(s.x + s.r * std::cos(s.a0)),
                             num(s.y + s.r * std::sin(s.a0)));
          arc(path, s.x, s.y, s.r, s.a0, s.a1);
        }
        break;
      case Shape::Kind::text:
        draw_text(s);
        return;
      case Shape::Kind::group_begin:
        body += fmt::format("q 1 0 0 1 {} {} cm {} 0 0 {} 0 0 cm\n", num(s.x), num(s.y), num(s.scale), num(s.scale));
        return;
      case Shape::Kind::group_end:
        body += "Q\n";
        return;
    }
    paint(s, path, closed);
  }

 private:
  void paint(const Shape& s, const std::string& path, bool closed) {
    auto fill = closed ? parse_color(s.fill) : std::nullopt;
    auto stroke = s.stroke_width > 0 ? parse_color(s.stroke) : std::nullopt;
    if (!fill && !stroke) return;
    const bool alpha = fill && s.opacity < 1;
    if (alpha) {
      std::string key = num(s.opacity);
      auto it = alpha_states.try_emplace(key, fmt::format("GS{}", alpha_states.size())).first;
      body += fmt::format("q /{} gs\n", it->second);
    }
    if (fill) body += rgb(*fill) + " rg\n";
    if (stroke) body += fmt::format("{} RG {} w\n", rgb(*stroke), num(s.stroke_width));
    body += path;
    if (fill && stroke) body += closed ? "b\n" : "B\n";
    else if (fill) body += "f\n";
    else body += closed ? "s\n" : "S\n";
    if (alpha) body += "Q\n";
  }

  void draw_text(const Shape& s) {
    if (s.text.empty()) return;
    auto c = parse_color(s.fill).value_or(Rgb{});
    double w = chart::text_width(s.text, s.font_size);
    double dx = s.anchor == chart::Anchor::middle ? -w / 2 : s.anchor == chart::Anchor::end ? -w : 0;
    double a = s.rotate * std::numbers::pi / 180;
    double cs = std::cos(a), sn = std::sin(a);
    if (std::abs(cs) < 1e-12) cs = 0;
    if (std::abs(sn) < 1e-12) sn = 0;
    // The anchor offset runs along the rotated baseline.
    double x = s.x + dx * cs, y = s.y + dx * sn;
    body += fmt::format("BT /F1 {} Tf {} rg {} {} {} {} {} {} Tm {} Tj ET\n", num(s.font_size), rgb(c), num(cs),
                        num(sn), num(sn), num(-cs), num(x), num(y), pdf_string(s.text));
  }
};

}  // namespace

std::string to_win_ansi(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    int len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
      cp = ((c & 0x1f) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3f);
      len = 2;
    } else if ((c >> 4) == 0xe && i + 2 < s.size()) {
      cp = ((c & 0x0f) << 12) | ((static_cast<unsigned char>(s[i + 1]) & 0x3f) << 6) |
           (static_cast<unsigned char>(s[i + 2]) & 0x3f);
      len = 3;
    } else if ((c >> 3) == 0x1e && i + 3 < s.size()) {
      cp = 0xfffd;
      len = 4;
    } else {
      cp = 0xfffd;
    }
    i += static_cast<std::size_t>(len);
    if (cp < 0x80 || (cp >= 0xa0 && cp <= 0xff)) {
      out += static_cast<char>(cp);
    } else if (auto b = win_ansi_high(cp)) {
      out += static_cast<char>(*b);
    } else {
      out += '?';
    }
  }
  return out;
}

std::string write(const chart::Scene& scene) {
  ContentWriter cw;
  // Flip to y-down so scene coordinates apply unchanged.
  cw.body = fmt::format("1 0 0 -1 0 {} cm\n", num(scene.height));
  for (const auto& s : scene.shapes) cw.shape(s);

  std::vector<std::string> objects;
  objects.push_back("<< /Type /Catalog /Pages 2 0 R >>");
  objects.push_back("<< /Type /Pages /Kids [3 0 R] /Count 1 >>");
  std::string gs;
  std::vector<std::string> gs_objects;
  for (const auto& [alpha, name] : cw.alpha_states) {
    int id = 6 + static_cast<int>(gs_objects.size());
    gs += fmt::format(" /{} {} 0 R", name, id);
    gs_objects.push_back(fmt::format("<< /Type /ExtGState /ca {} /CA {} >>", alpha, alpha));
  }
  std::string resources = "<< /Font << /F1 5 0 R >>";
  if (!gs.empty()) resources += " /ExtGState <<" + gs + " >>";
  resources += " >>";
  objects.push_back(fmt::format("<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {} {}] /Resources {} /Contents 4 0 R >>",
                                num(scene.width), num(scene.height), resources));
  objects.push_back(fmt::format("<< /Length {} >>\nstream\n{}endstream", cw.body.size(), cw.body));
  objects.push_back("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>");
  for (auto& o : gs_objects) objects.push_back(std::move(o));

  std::string out = "%PDF-1.4\n%\xe2\xe3\xcf\xd3\n";
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    offsets.push_back(out.size());
    out += fmt::format("{} 0 obj\n{}\nendobj\n", i + 1, objects[i]);
  }
  std::size_t xref = out.size();
  out += fmt::format("xref\n0 {}\n0000000000 65535 f \n", objects.size() + 1);
  for (auto off : offsets) out += fmt::format("{:010} 00000 n \n", off);
  out += fmt::format("trailer\n<< /Size {} /Root 1 0 R >>\nstartxref\n{}\n%%EOF\n", objects.size() + 1, xref);
  return out;
}

}  // namespace factflow::pdf
