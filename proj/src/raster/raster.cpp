#include "raster/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "common/error.hpp"
#include "common/parallel.hpp"

namespace gm::raster {

namespace {

constexpr int kSubpixelBits = 8;
constexpr std::int64_t kOne = std::int64_t(1) << kSubpixelBits;
constexpr int kMaxDepth = 24;
constexpr double kCoordinateLimit = 1e9;  // pixels; far outside any canvas

// Walks a closed contour as line and quadratic segments starting from an
// on-curve point. A run of two off-curve points is joined at their implicit
// midpoint.
template <typename Line, typename Quad>
void for_each_segment(const font::GlyphContour& c, Line&& line, Quad&& quad) {
  const std::size_t n = c.points.size();
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i)
    if (c.on_curve[i]) {
      first = i;
      break;
    }
  struct Pt {
    Vec2 p;
    bool on;
  };
  std::vector<Pt> seq;
  Vec2 start;
  if (first == n) {
    start = 0.5 * (c.points[n - 1] + c.points[0]);
    for (std::size_t k = 0; k < n; ++k) seq.push_back({c.points[k], false});
  } else {
    start = c.points[first];
    for (std::size_t k = 1; k < n; ++k) seq.push_back({c.points[(first + k) % n], bool(c.on_curve[(first + k) % n])});
  }
  seq.push_back({start, true});

  Vec2 current = start;
  for (std::size_t i = 0; i < seq.size();) {
    if (seq[i].on) {
      line(current, seq[i].p);
      current = seq[i].p;
      ++i;
      continue;
    }
    const Vec2 ctrl = seq[i].p;
    Vec2 end;
    if (seq[i + 1].on) {
      end = seq[i + 1].p;
      i += 2;
    } else {
      end = 0.5 * (ctrl + seq[i + 1].p);
      i += 1;
    }
    quad(current, ctrl, end);
    current = end;
  }
}

// Largest distance between the curve and its chord P0-P2.
double chord_deviation(Vec2 p0, Vec2 p1, Vec2 p2) {
  const Vec2 chord = p2 - p0;
  const double len2 = squared_norm(chord);
  const double bound = 0.25 * norm(p0 - 2.0 * p1 + p2);
  if (len2 == 0.0) return bound;
  const double u = dot(p1 - p0, chord) / len2;
  if (u < 0.0 || u > 1.0) return bound;
  // The curve's offset from the chord line is 2t(1-t) times the control
  // point's offset and its projection stays on the chord.
  const double h = std::abs(chord.x * (p1.y - p0.y) - chord.y * (p1.x - p0.x)) / std::sqrt(len2);
  return 0.5 * h;
}

void subdivide(Vec2 p0, Vec2 p1, Vec2 p2, double tolerance, int depth, std::vector<Vec2>& out) {
  if (depth >= kMaxDepth || chord_deviation(p0, p1, p2) <= tolerance) {
    out.push_back(p2);
    return;
  }
  const Vec2 a = 0.5 * (p0 + p1), b = 0.5 * (p1 + p2), mid = 0.5 * (a + b);
  subdivide(p0, a, mid, tolerance, depth + 1, out);
  subdivide(mid, b, p2, tolerance, depth + 1, out);
}

struct Edge {
  std::int64_t x0, y0, x1, y1;
  int dir;
};

struct Crossing {
  std::int64_t x;
  int dir;
  friend bool operator<(const Crossing& a, const Crossing& b) { return a.x != b.x ? a.x < b.x : a.dir < b.dir; }
};

std::int64_t to_fixed(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "cannot render a non-finite control point");
  return std::llround(std::clamp(v, -kCoordinateLimit, kCoordinateLimit) * double(kOne));
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::uint8_t blend(std::uint8_t bg, std::uint8_t fg, unsigned count, unsigned total) {
  return std::uint8_t((unsigned(bg) * (total - count) + unsigned(fg) * count + total / 2) / total);
}

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(std::uint8_t(v >> s));
}

void png_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
  put_u32be(out, std::uint32_t(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, out.data() + type_at, uInt(4 + data.size()));
  put_u32be(out, std::uint32_t(crc));
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string hex_color(Rgba8 c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

void check_sequence_shapes(const PointGrid& positions, const font::GlyphControlSet& controls,
                           const std::vector<int>& delays_cs) {
  if (positions.rows() != controls.total_points())
    throw Error(ErrorCode::InvalidArgument, "trajectory has " + std::to_string(positions.rows()) +
                                                " control points but the glyph set has " +
                                                std::to_string(controls.total_points()));
  if (delays_cs.size() != positions.frames())
    throw Error(ErrorCode::InvalidArgument, "delay count does not match frame count");
}

}  // namespace

void RenderSpec::validate() const {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Config, "render width and height must be positive");
  if (supersample != 1 && supersample != 2 && supersample != 4)
    throw Error(ErrorCode::Config, "supersample must be 1, 2 or 4");
  if (!(tolerance_px > 0.0)) throw Error(ErrorCode::Config, "flattening tolerance must be positive");
}

std::vector<Vec2> flatten_contour(const font::GlyphContour& contour, double tolerance) {
  if (contour.points.size() != contour.on_curve.size())
    throw Error(ErrorCode::InvalidArgument, "contour points and on-curve flags differ in length");
  std::vector<Vec2> out;
  if (contour.points.empty()) return out;
  bool first = true;
  auto line = [&](Vec2 a, Vec2 b) {
    if (first) {
      out.push_back(a);
      first = false;
    }
    out.push_back(b);
  };
  auto quad = [&](Vec2 a, Vec2 c, Vec2 b) {
    if (first) {
      out.push_back(a);
      first = false;
    }
    subdivide(a, c, b, tolerance, 0, out);
  };
  for_each_segment(contour, line, quad);
  // The walk ends back at the start vertex; the polyline closes implicitly.
  if (out.size() > 1 && out.back() == out.front()) out.pop_back();
  return out;
}

Image render_frame(const std::vector<font::GlyphContour>& contours, const RenderSpec& spec) {
  spec.validate();
  const int s = spec.supersample;
  const int sw = spec.width * s, sh = spec.height * s;
  const double sx = double(sw), sy = double(sh);
  // Flattening runs in supersampled pixel units.
  const double tolerance = spec.tolerance_px * s;

  std::vector<Edge> edges;
  for (const auto& contour : contours) {
    if (contour.points.size() < 2) continue;
    font::GlyphContour scaled = contour;
    for (auto& p : scaled.points) p = {p.x * sx, p.y * sy};
    auto poly = flatten_contour(scaled, tolerance);
    const std::size_t n = poly.size();
    std::vector<std::int64_t> fx(n), fy(n);
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = to_fixed(poly[i].x);
      fy[i] = to_fixed(poly[i].y);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      if (fy[i] == fy[j]) continue;
      edges.push_back({fx[i], fy[i], fx[j], fy[j], fy[j] > fy[i] ? 1 : -1});
    }
  }

  // Crossings per sample row; sample centers sit at (k + 1/2) / s pixels.
  std::vector<std::vector<Crossing>> rows(static_cast<std::size_t>(sh));
  for (const auto& e : edges) {
    const std::int64_t ylo = std::min(e.y0, e.y1), yhi = std::max(e.y0, e.y1);
    // Rows whose center c satisfies ylo <= c < yhi, with c = row * kOne + kOne / 2.
    std::int64_t r0 = floor_div(ylo - kOne / 2 + kOne - 1, kOne);
    std::int64_t r1 = floor_div(yhi - kOne / 2 - 1, kOne);
    r0 = std::max<std::int64_t>(r0, 0);
    r1 = std::min<std::int64_t>(r1, sh - 1);
    for (std::int64_t r = r0; r <= r1; ++r) {
      const std::int64_t c = r * kOne + kOne / 2;
      const std::int64_t x = e.x0 + floor_div((c - e.y0) * (e.x1 - e.x0), e.y1 - e.y0);
      rows[std::size_t(r)].push_back({x, e.dir});
    }
  }

  std::vector<std::uint16_t> coverage(std::size_t(spec.width) * std::size_t(spec.height), 0);
  for (int r = 0; r < sh; ++r) {
    auto& xs = rows[std::size_t(r)];
    if (xs.empty()) continue;
    std::sort(xs.begin(), xs.end());
    int winding = 0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      winding += xs[k].dir;
      if (winding == 0) continue;
      // Samples with center in [xs[k], xs[k+1]).
      std::int64_t c0 = floor_div(xs[k].x - kOne / 2 + kOne - 1, kOne);
      std::int64_t c1 = floor_div(xs[k + 1].x - kOne / 2 - 1, kOne);
      c0 = std::max<std::int64_t>(c0, 0);
      c1 = std::min<std::int64_t>(c1, sw - 1);
      const std::size_t row_base = std::size_t(r / s) * std::size_t(spec.width);
      for (std::int64_t c = c0; c <= c1; ++c) ++coverage[row_base + std::size_t(c / s)];
    }
  }

  Image out(spec.width, spec.height, spec.background);
  const unsigned total = unsigned(s * s);
  auto& px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const unsigned count = coverage[i];
    if (count == 0) continue;
    px[i] = {blend(spec.background.r, spec.fill.r, count, total), blend(spec.background.g, spec.fill.g, count, total),
             blend(spec.background.b, spec.fill.b, count, total), blend(spec.background.a, spec.fill.a, count, total)};
  }
  return out;
}

gif::FrameSequence render_sequence(const PointGrid& positions, const font::GlyphControlSet& controls,
                                   const RenderSpec& spec, const std::vector<int>& delays_cs, unsigned threads) {
  spec.validate();
  check_sequence_shapes(positions, controls, delays_cs);
  gif::FrameSequence seq;
  seq.frames.resize(positions.frames());
  seq.delays_cs = delays_cs;
  parallel_for(positions.frames(), threads ? threads : default_thread_count(), [&](std::size_t f) {
    seq.frames[f] = render_frame(controls.contours(positions.frame(f)), spec);
  });
  return seq;
}

std::string svg_path(const font::GlyphContour& contour, int width, int height) {
  std::string d;
  if (contour.points.empty()) return d;
  auto pt = [&](Vec2 p) { return format_number(p.x * width) + " " + format_number(p.y * height); };
  bool first = true;
  auto move = [&](Vec2 a) {
    if (first) {
      d += "M" + pt(a);
      first = false;
    }
  };
  auto line = [&](Vec2 a, Vec2 b) {
    move(a);
    d += " L" + pt(b);
  };
  auto quad = [&](Vec2 a, Vec2 c, Vec2 b) {
    move(a);
    d += " Q" + pt(c) + " " + pt(b);
  };
  for_each_segment(contour, line, quad);
  d += " Z";
  return d;
}

std::vector<std::pair<std::string, std::string>> svg_bundle(const PointGrid& positions,
                                                             const font::GlyphControlSet& controls,
                                                             const RenderSpec& spec,
                                                             const std::vector<int>& delays_cs) {
  spec.validate();
  check_sequence_shapes(positions, controls, delays_cs);
  std::vector<std::pair<std::string, std::string>> files;
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["width"] = spec.width;
  manifest["height"] = spec.height;
  manifest["frames"] = nlohmann::json::array();
  const std::string w = std::to_string(spec.width), h = std::to_string(spec.height);
  for (std::size_t f = 0; f < positions.frames(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.svg", f + 1);
    std::string doc = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h +
                      "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
    doc += "  <rect width=\"" + w + "\" height=\"" + h + "\" fill=\"" + hex_color(spec.background) + "\"/>\n";
    for (const auto& contour : controls.contours(positions.frame(f)))
      doc += "  <path fill=\"" + hex_color(spec.fill) + "\" fill-rule=\"nonzero\" d=\"" +
             svg_path(contour, spec.width, spec.height) + "\"/>\n";
    doc += "</svg>\n";
    files.emplace_back(name, std::move(doc));
    manifest["frames"].push_back({{"file", name}, {"delay_cs", delays_cs[f]}});
  }
  files.emplace_back("manifest.json", manifest.dump(2) + "\n");
  return files;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "cannot encode an empty image");
  const std::size_t stride = std::size_t(image.width()) * 4 + 1;
  std::vector<std::uint8_t> raw(stride * std::size_t(image.height()));
  for (int y = 0; y < image.height(); ++y) {
    std::uint8_t* row = raw.data() + std::size_t(y) * stride;
    row[0] = 0;  // no filter
    for (int x = 0; x < image.width(); ++x) {
      Rgba8 c = image.at(x, y);
      row[1 + 4 * x] = c.r;
      row[2 + 4 * x] = c.g;
      row[3 + 4 * x] = c.b;
      row[4 + 4 * x] = c.a;
    }
  }
  uLongf packed_size = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw Error(ErrorCode::Io, "zlib compression failed");
  packed.resize(packed_size);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32be(ihdr, std::uint32_t(image.width()));
  put_u32be(ihdr, std::uint32_t(image.height()));
  ihdr.insert(ihdr.end(), {8, 6, 0, 0, 0});  // 8-bit RGBA, no interlace
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", packed);
  png_chunk(out, "IEND", {});
  return out;
}

}  // namespace gm::raster
