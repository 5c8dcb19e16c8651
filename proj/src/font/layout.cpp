#include "font/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "common/error.hpp"

namespace gm::font {

namespace {

constexpr int kControlSetSchemaVersion = 1;
constexpr std::size_t kSparseGlyphThreshold = 5;

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0x00A0 ||
         c == 0x3000;
}

std::string describe(char32_t cp) {
  if (cp >= 0x20 && cp < 0x7F) return std::string("'") + char(cp) + "'";
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", unsigned(cp));
  return buf;
}

}  // namespace

std::u32string decode_utf8(const std::string& text) {
  std::u32string out;
  std::size_t i = 0;
  auto bad = [&] { throw Error(ErrorCode::InvalidArgument, "text is not valid UTF-8 (byte " + std::to_string(i) + ")"); };
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      bad();
    }
    if (i + extra >= text.size()) bad();
    for (int k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) bad();
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (cp > 0x10FFFF) bad();
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(const std::u32string& text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(char(cp));
    } else if (cp < 0x800) {
      out.push_back(char(0xC0 | (cp >> 6)));
      out.push_back(char(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(char(0xE0 | (cp >> 12)));
      out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(char(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(char(0xF0 | (cp >> 18)));
      out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(char(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::vector<GlyphContour> GlyphControlSet::contours(const std::vector<Vec2>& positions) const {
  if (positions.size() != points.size())
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(points.size()) + " positions, got " +
                                                std::to_string(positions.size()));
  std::vector<GlyphContour> out;
  for (const auto& glyph : glyphs) {
    for (const auto& range : glyph.contours) {
      GlyphContour c;
      c.points.assign(positions.begin() + std::ptrdiff_t(range.start),
                      positions.begin() + std::ptrdiff_t(range.start + range.count));
      c.on_curve.assign(on_curve.begin() + std::ptrdiff_t(range.start),
                        on_curve.begin() + std::ptrdiff_t(range.start + range.count));
      out.push_back(std::move(c));
    }
  }
  return out;
}

LayoutResult layout_text(const Font& font, const std::string& text, CanvasSpec canvas, double margin) {
  if (canvas.width <= 0 || canvas.height <= 0)
    throw Error(ErrorCode::InvalidArgument, "canvas width and height must be positive");
  if (!(margin >= 0.0 && margin < 0.5)) throw Error(ErrorCode::InvalidArgument, "margin must be in [0, 0.5)");

  LayoutResult result;
  std::u32string chars = decode_utf8(text);
  auto first = std::find_if_not(chars.begin(), chars.end(), is_space);
  auto last = std::find_if_not(chars.rbegin(), chars.rend(), is_space).base();
  if (first >= last) throw Error(ErrorCode::Layout, "no drawable glyphs: text is empty after trimming whitespace");
  chars = std::u32string(first, last);

  TextLayout& layout = result.layout;
  layout.text = chars;
  layout.font_id = font.id();
  layout.canvas = canvas;
  layout.margin = margin;

  // Pass 1: explicit contours in font units, pen positions, bounding box.
  struct Placed {
    Glyph glyph;
    std::vector<Contour> contours;
  };
  std::vector<Placed> placed;
  double pen = 0.0;
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (char32_t cp : chars) {
    Placed p{font.glyph_for(cp, &result.warnings), {}};
    for (const auto& contour : p.glyph.outline->contours) {
      if (contour.empty()) continue;
      Contour explicit_contour = make_midpoints_explicit(contour);
      for (auto& pt : explicit_contour) {
        pt.pos.x += pen;
        min_x = std::min(min_x, pt.pos.x);
        max_x = std::max(max_x, pt.pos.x);
        min_y = std::min(min_y, pt.pos.y);
        max_y = std::max(max_y, pt.pos.y);
      }
      p.contours.push_back(std::move(explicit_contour));
    }
    layout.pen_x.push_back(pen);
    layout.advances.push_back(p.glyph.advance);
    pen += p.glyph.advance;
    placed.push_back(std::move(p));
  }
  if (!(min_x <= max_x)) throw Error(ErrorCode::Layout, "no drawable glyphs");

  const double box_w = max_x - min_x;
  const double box_h = max_y - min_y;
  const double avail_w = (1.0 - 2.0 * margin) * canvas.width;
  const double avail_h = (1.0 - 2.0 * margin) * canvas.height;
  double scale = std::numeric_limits<double>::infinity();
  if (box_w > 0) scale = std::min(scale, avail_w / box_w);
  if (box_h > 0) scale = std::min(scale, avail_h / box_h);
  if (!std::isfinite(scale)) scale = 1.0;  // single point
  layout.scale = scale;
  layout.translation = {(canvas.width - scale * box_w) / 2.0, (canvas.height - scale * box_h) / 2.0};
  layout.baseline_y = 0.0;

  const double inv_w = 1.0 / canvas.width;
  const double inv_h = 1.0 / canvas.height;
  auto to_canvas = [&](Vec2 p) {
    double px = layout.translation.x + scale * (p.x - min_x);
    double py = layout.translation.y + scale * (max_y - p.y);
    return Vec2{px * inv_w, py * inv_h};
  };

  GlyphControlSet& controls = result.controls;
  for (std::size_t g = 0; g < placed.size(); ++g) {
    GlyphEntry entry;
    entry.codepoint = chars[g];
    entry.glyph_id = placed[g].glyph.id;
    entry.first_point = controls.points.size();
    for (const auto& contour : placed[g].contours) {
      entry.contours.push_back({controls.points.size(), contour.size()});
      for (const auto& pt : contour) {
        controls.points.push_back(to_canvas(pt.pos));
        controls.on_curve.push_back(pt.on_curve);
      }
    }
    entry.point_count = controls.points.size() - entry.first_point;
    if (entry.point_count > 0 && entry.point_count < kSparseGlyphThreshold)
      result.warnings.push_back("glyph " + describe(entry.codepoint) + " has only " +
                                std::to_string(entry.point_count) +
                                " control points; deformation works best with more than 5");
    controls.glyphs.push_back(std::move(entry));
  }
  if (controls.total_points() < 3) throw Error(ErrorCode::Layout, "no drawable glyphs");
  return result;
}

nlohmann::json to_json(const GlyphControlSet& controls, const TextLayout& layout) {
  nlohmann::json doc;
  doc["version"] = kControlSetSchemaVersion;
  doc["text"] = encode_utf8(layout.text);
  doc["font"] = layout.font_id;
  doc["canvas"] = {{"width", layout.canvas.width}, {"height", layout.canvas.height}};
  doc["margin"] = layout.margin;
  doc["total_points"] = controls.total_points();
  auto points = nlohmann::json::array();
  for (auto p : controls.points) points.push_back({p.x, p.y});
  doc["points"] = std::move(points);
  auto on_curve = nlohmann::json::array();
  for (bool b : controls.on_curve) on_curve.push_back(b);
  doc["on_curve"] = std::move(on_curve);
  auto glyphs = nlohmann::json::array();
  for (const auto& g : controls.glyphs) {
    auto contours = nlohmann::json::array();
    for (const auto& c : g.contours) contours.push_back({{"start", c.start}, {"count", c.count}});
    glyphs.push_back({{"codepoint", std::uint32_t(g.codepoint)},
                      {"glyph_id", g.glyph_id},
                      {"first_point", g.first_point},
                      {"point_count", g.point_count},
                      {"contours", std::move(contours)}});
  }
  doc["glyphs"] = std::move(glyphs);
  return doc;
}

GlyphControlSet control_set_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != kControlSetSchemaVersion)
      throw Error(ErrorCode::InvalidArgument, "unsupported control set schema version");
    GlyphControlSet out;
    for (const auto& p : doc.at("points")) out.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& b : doc.at("on_curve")) out.on_curve.push_back(b.get<bool>());
    if (out.on_curve.size() != out.points.size())
      throw Error(ErrorCode::InvalidArgument, "points and on_curve differ in length");
    for (const auto& g : doc.at("glyphs")) {
      GlyphEntry e;
      e.codepoint = g.at("codepoint").get<std::uint32_t>();
      e.glyph_id = g.at("glyph_id").get<std::uint16_t>();
      e.first_point = g.at("first_point").get<std::size_t>();
      e.point_count = g.at("point_count").get<std::size_t>();
      for (const auto& c : g.at("contours")) {
        ContourRange r{c.at("start").get<std::size_t>(), c.at("count").get<std::size_t>()};
        if (r.start + r.count > out.points.size())
          throw Error(ErrorCode::InvalidArgument, "contour range exceeds point count");
        e.contours.push_back(r);
      }
      out.glyphs.push_back(std::move(e));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed control set: ") + e.what());
  }
}

}  // namespace gm::font
