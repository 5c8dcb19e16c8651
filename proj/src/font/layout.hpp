#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/geometry.hpp"
#include "font/ttf.hpp"

namespace gm::font {

struct CanvasSpec {
  int width = 256;
  int height = 256;
};

/// One closed contour in normalized canvas units (y down). After layout no
/// two consecutive points are both off-curve.
struct GlyphContour {
  std::vector<Vec2> points;
  std::vector<bool> on_curve;
};

struct ContourRange {
  std::size_t start = 0;  // flat point index
  std::size_t count = 0;
};

struct GlyphEntry {
  char32_t codepoint = 0;
  std::uint16_t glyph_id = 0;
  std::size_t first_point = 0;
  std::size_t point_count = 0;
  std::vector<ContourRange> contours;
};

/// Flat control-point list C^0 for a laid-out string. Index j is stable for
/// the whole pipeline.
struct GlyphControlSet {
  std::vector<Vec2> points;
  std::vector<bool> on_curve;
  std::vector<GlyphEntry> glyphs;

  std::size_t total_points() const { return points.size(); }

  /// Contours with positions taken from `positions` (size M); used to draw
  /// deformed frames.
  std::vector<GlyphContour> contours(const std::vector<Vec2>& positions) const;
  std::vector<GlyphContour> contours() const { return contours(points); }
};

struct TextLayout {
  std::u32string text;
  std::string font_id;
  CanvasSpec canvas;
  double margin = 0.1;
  std::vector<double> pen_x;  // per-glyph pen position, font units
  std::vector<int> advances;  // per-glyph advance, font units
  double baseline_y = 0.0;    // font units
  double scale = 1.0;         // canvas pixels per font unit
  Vec2 translation;           // pixel offset of font point (min_x, max_y)
};

struct LayoutResult {
  TextLayout layout;
  GlyphControlSet controls;
  std::vector<std::string> warnings;
};

std::u32string decode_utf8(const std::string& text);
std::string encode_utf8(const std::u32string& text);

/// Lays `text` out left to right by advance and maps every control point
/// into [margin, 1 - margin]^2 of the canvas. Throws gm::Error(Layout) when
/// the text has no drawable glyph.
LayoutResult layout_text(const Font& font, const std::string& text, CanvasSpec canvas, double margin = 0.1);

/// Documented control-set schema (version 1). Serialization is deterministic.
nlohmann::json to_json(const GlyphControlSet& controls, const TextLayout& layout);
GlyphControlSet control_set_from_json(const nlohmann::json& doc);

}  // namespace gm::font
