#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "common/geometry.hpp"
#include "common/image.hpp"
#include "font/layout.hpp"
#include "gif/gif.hpp"

namespace gm::raster {

struct RenderSpec {
  int width = 256;
  int height = 256;
  Rgba8 background{255, 255, 255, 255};
  Rgba8 fill{0, 0, 0, 255};
  int supersample = 4;         // 1, 2 or 4
  double tolerance_px = 0.25;  // bezier flattening tolerance

  void validate() const;
};

/// Closed polyline approximating the contour. Quadratic segments are split
/// at t = 1/2 until every piece lies within `tolerance` of its chord (same
/// units as the contour). The closing edge back to the first vertex is
/// implicit.
std::vector<Vec2> flatten_contour(const font::GlyphContour& contour, double tolerance);

/// Fills all contours jointly with the nonzero winding rule. Contour
/// coordinates are normalized canvas units; anything outside the canvas is
/// clipped. Coverage is accumulated in integers.
Image render_frame(const std::vector<font::GlyphContour>& contours, const RenderSpec& spec);

/// One frame per column of `positions` (M x F, rows indexed like
/// controls.points).
gif::FrameSequence render_sequence(const PointGrid& positions, const font::GlyphControlSet& controls,
                                   const RenderSpec& spec, const std::vector<int>& delays_cs, unsigned threads = 0);

/// SVG path data in pixel units: M/Q/L commands ending in Z.
std::string svg_path(const font::GlyphContour& contour, int width, int height);

/// Frame SVG documents plus `manifest.json`, as (file name, content) pairs.
/// Each frame has one <path> per contour.
std::vector<std::pair<std::string, std::string>> svg_bundle(const PointGrid& positions,
                                                             const font::GlyphControlSet& controls,
                                                             const RenderSpec& spec, const std::vector<int>& delays_cs);

std::vector<std::uint8_t> encode_png(const Image& image);

}  // namespace gm::raster
