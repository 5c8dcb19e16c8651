#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/geometry.hpp"

namespace gm::font {

struct OutlinePoint {
  Vec2 pos;  // font units, y up
  bool on_curve = true;
};

using Contour = std::vector<OutlinePoint>;

/// Simple-glyph outline. Composite glyphs are resolved into this form when
/// the font is parsed.
struct Outline {
  std::vector<Contour> contours;

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& c : contours) n += c.size();
    return n;
  }
};

struct Glyph {
  std::uint16_t id = 0;
  const Outline* outline = nullptr;
  int advance = 0;
  bool missing = false;  // true when the code point fell back to .notdef
};

/// Parsed TrueType font. Immutable after construction; concurrent reads are
/// safe.
class Font {
 public:
  static std::shared_ptr<const Font> parse(std::span<const std::uint8_t> bytes, std::string id = "font");
  static std::shared_ptr<const Font> load_file(const std::filesystem::path& path);

  const std::string& id() const { return id_; }
  int units_per_em() const { return units_per_em_; }
  int ascender() const { return ascender_; }
  int descender() const { return descender_; }
  std::size_t glyph_count() const { return outlines_.size(); }

  std::optional<std::uint16_t> glyph_index(char32_t codepoint) const;
  const Outline& outline(std::uint16_t glyph_id) const;
  int advance(std::uint16_t glyph_id) const;

  /// Looks up a code point, falling back to glyph 0 (.notdef) when the font
  /// has no mapping. `warnings`, when given, receives a note for the fallback.
  Glyph glyph_for(char32_t codepoint, std::vector<std::string>* warnings = nullptr) const;

 private:
  Font() = default;

  // Code points first..last map to start_glyph + (cp - first).
  struct CmapGroup {
    char32_t first;
    char32_t last;
    std::uint32_t start_glyph;
  };

  std::string id_;
  int units_per_em_ = 0;
  int ascender_ = 0;
  int descender_ = 0;
  std::vector<Outline> outlines_;
  std::vector<int> advances_;
  std::vector<CmapGroup> cmap_;  // sorted, non-overlapping

  friend class FontParser;
};

/// Inserts an explicit on-curve midpoint between every pair of consecutive
/// off-curve points (cyclically). Idempotent.
Contour make_midpoints_explicit(const Contour& contour);

}  // namespace gm::font
