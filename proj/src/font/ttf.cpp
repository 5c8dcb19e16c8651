#include "font/ttf.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>

#include "common/error.hpp"

namespace gm::font {

namespace {

constexpr std::uint32_t make_tag(char a, char b, char c, char d) {
  return (std::uint32_t(std::uint8_t(a)) << 24) | (std::uint32_t(std::uint8_t(b)) << 16) |
         (std::uint32_t(std::uint8_t(c)) << 8) | std::uint32_t(std::uint8_t(d));
}

// Simple-glyph flags.
constexpr std::uint8_t kOnCurve = 0x01;
constexpr std::uint8_t kXShort = 0x02;
constexpr std::uint8_t kYShort = 0x04;
constexpr std::uint8_t kRepeat = 0x08;
constexpr std::uint8_t kXSameOrPositive = 0x10;
constexpr std::uint8_t kYSameOrPositive = 0x20;

// Composite-glyph flags.
constexpr std::uint16_t kArgsAreWords = 0x0001;
constexpr std::uint16_t kArgsAreXY = 0x0002;
constexpr std::uint16_t kHaveScale = 0x0008;
constexpr std::uint16_t kMoreComponents = 0x0020;
constexpr std::uint16_t kHaveXYScale = 0x0040;
constexpr std::uint16_t kHaveTwoByTwo = 0x0080;
constexpr std::uint16_t kScaledComponentOffset = 0x0800;

constexpr int kMaxCompositeDepth = 16;

/// Bounds-checked big-endian reader over one table.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, std::string table) : data_(data), table_(std::move(table)) {}

  std::size_t size() const { return data_.size(); }
  std::size_t tell() const { return pos_; }
  void seek(std::size_t pos) {
    if (pos > data_.size()) fail("offset " + std::to_string(pos) + " past end");
    pos_ = pos;
  }
  void skip(std::size_t n) { seek(pos_ + n); }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = std::uint16_t(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = std::uint32_t(data_[pos_]) << 24 | std::uint32_t(data_[pos_ + 1]) << 16 |
                      std::uint32_t(data_[pos_ + 2]) << 8 | std::uint32_t(data_[pos_ + 3]);
    pos_ += 4;
    return v;
  }
  double f2dot14() { return i16() / 16384.0; }

  std::span<const std::uint8_t> slice(std::size_t offset, std::size_t length) const {
    if (offset > data_.size() || length > data_.size() - offset)
      fail("range [" + std::to_string(offset) + ", +" + std::to_string(length) + ") out of bounds");
    return data_.subspan(offset, length);
  }

  [[noreturn]] void fail(const std::string& what) const { throw FontError(table_, what); }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) fail("unexpected end of data at offset " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> data_;
  std::string table_;
  std::size_t pos_ = 0;
};

struct TableRecord {
  std::uint32_t offset;
  std::uint32_t length;
};

struct RawComponent {
  std::uint16_t glyph;
  std::uint16_t flags;
  std::int32_t arg1;
  std::int32_t arg2;
  double a = 1, b = 0, c = 0, d = 1;
};

// Glyph as stored in `glyf`, before composites are resolved.
struct RawGlyph {
  Outline simple;
  std::vector<RawComponent> components;
  bool composite = false;
};

}  // namespace

class FontParser {
 public:
  FontParser(std::span<const std::uint8_t> bytes) : file_(bytes, "sfnt") {}

  std::shared_ptr<const Font> run(std::string id) {
    auto font = std::shared_ptr<Font>(new Font());
    font->id_ = std::move(id);
    read_directory();
    read_head(*font);
    read_maxp();
    read_hhea(*font);
    read_hmtx(*font);
    read_cmap(*font);
    read_loca();
    read_glyf(*font);
    return font;
  }

 private:
  Reader table(std::uint32_t tag, const char* name) const {
    auto it = tables_.find(tag);
    if (it == tables_.end()) throw FontError(name, "required table missing");
    Reader r(file_.slice(it->second.offset, it->second.length), name);
    return r;
  }

  void read_directory() {
    std::uint32_t version = file_.u32();
    if (version != 0x00010000u && version != make_tag('t', 'r', 'u', 'e')) {
      if (version == make_tag('O', 'T', 'T', 'O'))
        file_.fail("CFF-flavoured OpenType outlines are not supported");
      file_.fail("not a TrueType file (bad sfnt version)");
    }
    std::uint16_t num_tables = file_.u16();
    file_.skip(6);
    for (std::uint16_t i = 0; i < num_tables; ++i) {
      std::uint32_t tag = file_.u32();
      file_.skip(4);  // checksum
      std::uint32_t offset = file_.u32();
      std::uint32_t length = file_.u32();
      file_.slice(offset, length);  // validates bounds
      tables_[tag] = {offset, length};
    }
  }

  void read_head(Font& font) {
    Reader r = table(make_tag('h', 'e', 'a', 'd'), "head");
    r.seek(18);
    font.units_per_em_ = r.u16();
    if (font.units_per_em_ < 16 || font.units_per_em_ > 16384) r.fail("unitsPerEm out of range");
    r.seek(50);
    index_to_loc_format_ = r.i16();
    if (index_to_loc_format_ != 0 && index_to_loc_format_ != 1) r.fail("bad indexToLocFormat");
  }

  void read_maxp() {
    Reader r = table(make_tag('m', 'a', 'x', 'p'), "maxp");
    r.skip(4);
    num_glyphs_ = r.u16();
    if (num_glyphs_ == 0) r.fail("font has no glyphs");
  }

  void read_hhea(Font& font) {
    Reader r = table(make_tag('h', 'h', 'e', 'a'), "hhea");
    r.seek(4);
    font.ascender_ = r.i16();
    font.descender_ = r.i16();
    r.seek(34);
    num_hmetrics_ = r.u16();
    if (num_hmetrics_ == 0 || num_hmetrics_ > num_glyphs_) r.fail("bad numberOfHMetrics");
  }

  void read_hmtx(Font& font) {
    Reader r = table(make_tag('h', 'm', 't', 'x'), "hmtx");
    font.advances_.resize(num_glyphs_);
    int last = 0;
    for (std::uint16_t g = 0; g < num_hmetrics_; ++g) {
      last = r.u16();
      r.skip(2);
      font.advances_[g] = last;
    }
    for (std::uint16_t g = num_hmetrics_; g < num_glyphs_; ++g) font.advances_[g] = last;
  }

  void read_cmap(Font& font) {
    Reader r = table(make_tag('c', 'm', 'a', 'p'), "cmap");
    r.skip(2);
    std::uint16_t count = r.u16();
    // Higher rank wins: full-repertoire Unicode subtables first.
    int best_rank = -1;
    std::uint32_t best_offset = 0;
    for (std::uint16_t i = 0; i < count; ++i) {
      std::uint16_t platform = r.u16();
      std::uint16_t encoding = r.u16();
      std::uint32_t offset = r.u32();
      int rank = -1;
      if (platform == 3 && encoding == 10) rank = 5;
      else if (platform == 0 && (encoding == 4 || encoding == 6)) rank = 4;
      else if (platform == 3 && encoding == 1) rank = 3;
      else if (platform == 0) rank = 2;
      else if (platform == 1 && encoding == 0) rank = 0;
      if (rank > best_rank) {
        best_rank = rank;
        best_offset = offset;
      }
    }
    if (best_rank < 0) r.fail("no usable Unicode subtable");
    r.seek(best_offset);
    std::uint16_t format = r.u16();
    std::map<char32_t, std::uint32_t> mapping;
    switch (format) {
      case 0: {
        r.skip(4);
        for (char32_t cp = 0; cp < 256; ++cp) {
          std::uint8_t g = r.u8();
          if (g) mapping[cp] = g;
        }
        break;
      }
      case 4: read_cmap_format4(r, mapping); break;
      case 6: {
        r.skip(4);
        std::uint16_t first = r.u16();
        std::uint16_t n = r.u16();
        for (std::uint16_t i = 0; i < n; ++i) {
          std::uint16_t g = r.u16();
          if (g) mapping[char32_t(first + i)] = g;
        }
        break;
      }
      case 12: {
        r.skip(10);
        std::uint32_t groups = r.u32();
        if (groups > r.size() / 12) r.fail("format 12 group count exceeds table size");
        for (std::uint32_t i = 0; i < groups; ++i) {
          std::uint32_t first = r.u32();
          std::uint32_t last = r.u32();
          std::uint32_t glyph = r.u32();
          if (last < first || last > 0x10FFFF) r.fail("bad format 12 group");
          font.cmap_.push_back({first, last, glyph});
        }
        std::sort(font.cmap_.begin(), font.cmap_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        return;
      }
      default: r.fail("unsupported subtable format " + std::to_string(format));
    }
    for (auto [cp, glyph] : mapping) {
      if (!font.cmap_.empty()) {
        auto& back = font.cmap_.back();
        if (back.last + 1 == cp && back.start_glyph + (back.last - back.first) + 1 == glyph) {
          back.last = cp;
          continue;
        }
      }
      font.cmap_.push_back({cp, cp, glyph});
    }
  }

  void read_cmap_format4(Reader& r, std::map<char32_t, std::uint32_t>& mapping) {
    r.skip(4);  // length, language
    std::uint16_t seg_count = r.u16() / 2;
    r.skip(6);
    std::size_t ends_at = r.tell();
    std::size_t starts_at = ends_at + 2 * seg_count + 2;
    std::size_t deltas_at = starts_at + 2 * seg_count;
    std::size_t range_offsets_at = deltas_at + 2 * seg_count;
    for (std::uint16_t s = 0; s < seg_count; ++s) {
      r.seek(ends_at + 2 * s);
      std::uint16_t end = r.u16();
      r.seek(starts_at + 2 * s);
      std::uint16_t start = r.u16();
      r.seek(deltas_at + 2 * s);
      std::uint16_t delta = r.u16();
      std::size_t ro_pos = range_offsets_at + 2 * s;
      r.seek(ro_pos);
      std::uint16_t range_offset = r.u16();
      if (start > end) r.fail("format 4 segment start > end");
      for (std::uint32_t cp = start; cp <= end; ++cp) {
        if (cp == 0xFFFF) break;
        std::uint16_t glyph;
        if (range_offset == 0) {
          glyph = std::uint16_t(cp + delta);
        } else {
          r.seek(ro_pos + range_offset + 2 * (cp - start));
          glyph = r.u16();
          if (glyph) glyph = std::uint16_t(glyph + delta);
        }
        if (glyph && glyph < num_glyphs_) mapping[cp] = glyph;
      }
    }
  }

  void read_loca() {
    Reader r = table(make_tag('l', 'o', 'c', 'a'), "loca");
    loca_.resize(std::size_t(num_glyphs_) + 1);
    for (auto& offset : loca_) offset = index_to_loc_format_ == 0 ? std::uint32_t(r.u16()) * 2 : r.u32();
    for (std::size_t i = 1; i < loca_.size(); ++i)
      if (loca_[i] < loca_[i - 1]) r.fail("offsets not monotonic at glyph " + std::to_string(i - 1));
  }

  void read_glyf(Font& font) {
    Reader glyf = table(make_tag('g', 'l', 'y', 'f'), "glyf");
    if (loca_.back() > glyf.size()) throw FontError("loca", "offsets exceed glyf table size");
    std::vector<RawGlyph> raw(num_glyphs_);
    for (std::uint16_t g = 0; g < num_glyphs_; ++g) {
      std::size_t begin = loca_[g];
      std::size_t end = loca_[std::size_t(g) + 1];
      if (begin == end) continue;  // empty glyph (e.g. space)
      Reader r(glyf.slice(begin, end - begin), "glyf");
      raw[g] = parse_glyph(r, g);
    }
    font.outlines_.resize(num_glyphs_);
    std::vector<int> state(num_glyphs_, 0);  // 0 todo, 1 in progress, 2 done
    for (std::uint16_t g = 0; g < num_glyphs_; ++g) resolve(g, raw, font.outlines_, state, 0);
  }

  RawGlyph parse_glyph(Reader& r, std::uint16_t glyph_id) {
    RawGlyph out;
    std::int16_t contours = r.i16();
    r.skip(8);  // bbox
    if (contours >= 0) {
      parse_simple(r, contours, out.simple);
      return out;
    }
    out.composite = true;
    std::uint16_t flags = 0;
    do {
      RawComponent c;
      flags = r.u16();
      c.flags = flags;
      c.glyph = r.u16();
      if (c.glyph >= num_glyphs_)
        r.fail("glyph " + std::to_string(glyph_id) + " references missing component " + std::to_string(c.glyph));
      if (flags & kArgsAreWords) {
        if (flags & kArgsAreXY) {
          c.arg1 = r.i16();
          c.arg2 = r.i16();
        } else {
          c.arg1 = r.u16();
          c.arg2 = r.u16();
        }
      } else {
        if (flags & kArgsAreXY) {
          c.arg1 = r.i8();
          c.arg2 = r.i8();
        } else {
          c.arg1 = r.u8();
          c.arg2 = r.u8();
        }
      }
      if (flags & kHaveScale) {
        c.a = c.d = r.f2dot14();
      } else if (flags & kHaveXYScale) {
        c.a = r.f2dot14();
        c.d = r.f2dot14();
      } else if (flags & kHaveTwoByTwo) {
        c.a = r.f2dot14();
        c.b = r.f2dot14();
        c.c = r.f2dot14();
        c.d = r.f2dot14();
      }
      out.components.push_back(c);
    } while (flags & kMoreComponents);
    return out;
  }

  static void parse_simple(Reader& r, int contour_count, Outline& outline) {
    std::vector<std::uint16_t> ends(contour_count);
    int previous = -1;
    for (auto& e : ends) {
      e = r.u16();
      if (int(e) <= previous) r.fail("contour end points not increasing");
      previous = e;
    }
    std::size_t point_count = contour_count ? std::size_t(ends.back()) + 1 : 0;
    std::uint16_t instruction_length = r.u16();
    r.skip(instruction_length);

    std::vector<std::uint8_t> flags;
    flags.reserve(point_count);
    while (flags.size() < point_count) {
      std::uint8_t f = r.u8();
      flags.push_back(f);
      if (f & kRepeat) {
        std::uint8_t repeat = r.u8();
        if (flags.size() + repeat > point_count) r.fail("flag repeat overruns point count");
        flags.insert(flags.end(), repeat, f);
      }
    }
    std::vector<int> xs(point_count), ys(point_count);
    int x = 0;
    for (std::size_t i = 0; i < point_count; ++i) {
      if (flags[i] & kXShort) {
        int dx = r.u8();
        x += (flags[i] & kXSameOrPositive) ? dx : -dx;
      } else if (!(flags[i] & kXSameOrPositive)) {
        x += r.i16();
      }
      xs[i] = x;
    }
    int y = 0;
    for (std::size_t i = 0; i < point_count; ++i) {
      if (flags[i] & kYShort) {
        int dy = r.u8();
        y += (flags[i] & kYSameOrPositive) ? dy : -dy;
      } else if (!(flags[i] & kYSameOrPositive)) {
        y += r.i16();
      }
      ys[i] = y;
    }
    std::size_t start = 0;
    for (auto end : ends) {
      Contour contour;
      for (std::size_t i = start; i <= end; ++i)
        contour.push_back({{double(xs[i]), double(ys[i])}, bool(flags[i] & kOnCurve)});
      outline.contours.push_back(std::move(contour));
      start = std::size_t(end) + 1;
    }
  }

  void resolve(std::uint16_t g, const std::vector<RawGlyph>& raw, std::vector<Outline>& out,
               std::vector<int>& state, int depth) {
    if (state[g] == 2) return;
    if (state[g] == 1 || depth > kMaxCompositeDepth)
      throw FontError("glyf", "composite glyph " + std::to_string(g) + " is recursive");
    if (!raw[g].composite) {
      out[g] = raw[g].simple;
      state[g] = 2;
      return;
    }
    state[g] = 1;
    Outline result;
    std::vector<Vec2> placed;  // all points so far, for point matching
    for (const auto& comp : raw[g].components) {
      resolve(comp.glyph, raw, out, state, depth + 1);
      const Outline& child = out[comp.glyph];
      auto transform = [&](Vec2 p) { return Vec2{comp.a * p.x + comp.c * p.y, comp.b * p.x + comp.d * p.y}; };
      Vec2 offset;
      if (comp.flags & kArgsAreXY) {
        offset = {double(comp.arg1), double(comp.arg2)};
        if (comp.flags & kScaledComponentOffset) offset = transform(offset);
      } else {
        std::vector<Vec2> child_points;
        for (const auto& c : child.contours)
          for (const auto& p : c) child_points.push_back(transform(p.pos));
        if (std::size_t(comp.arg1) >= placed.size() || std::size_t(comp.arg2) >= child_points.size())
          throw FontError("glyf", "composite glyph " + std::to_string(g) + " has bad anchor point indices");
        offset = placed[comp.arg1] - child_points[comp.arg2];
      }
      for (const auto& c : child.contours) {
        Contour moved;
        moved.reserve(c.size());
        for (const auto& p : c) {
          Vec2 q = transform(p.pos) + offset;
          moved.push_back({q, p.on_curve});
          placed.push_back(q);
        }
        result.contours.push_back(std::move(moved));
      }
    }
    out[g] = std::move(result);
    state[g] = 2;
  }

  Reader file_;
  std::map<std::uint32_t, TableRecord> tables_;
  int index_to_loc_format_ = 0;
  std::uint16_t num_glyphs_ = 0;
  std::uint16_t num_hmetrics_ = 0;
  std::vector<std::uint32_t> loca_;
};

std::shared_ptr<const Font> Font::parse(std::span<const std::uint8_t> bytes, std::string id) {
  return FontParser(bytes).run(std::move(id));
}

std::shared_ptr<const Font> Font::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open font file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes, path.stem().string());
}

std::optional<std::uint16_t> Font::glyph_index(char32_t codepoint) const {
  auto it = std::upper_bound(cmap_.begin(), cmap_.end(), codepoint,
                             [](char32_t cp, const CmapGroup& g) { return cp < g.first; });
  if (it == cmap_.begin()) return std::nullopt;
  --it;
  if (codepoint > it->last) return std::nullopt;
  std::uint32_t glyph = it->start_glyph + (codepoint - it->first);
  if (glyph == 0 || glyph >= outlines_.size()) return std::nullopt;
  return static_cast<std::uint16_t>(glyph);
}

const Outline& Font::outline(std::uint16_t glyph_id) const { return outlines_.at(glyph_id); }

int Font::advance(std::uint16_t glyph_id) const { return advances_.at(glyph_id); }

Glyph Font::glyph_for(char32_t codepoint, std::vector<std::string>* warnings) const {
  Glyph g;
  auto index = glyph_index(codepoint);
  if (!index) {
    g.missing = true;
    if (warnings)
      warnings->push_back("font '" + id_ + "' has no glyph for U+" + [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04X", unsigned(codepoint));
        return std::string(buf);
      }() + "; using .notdef");
  }
  g.id = index.value_or(0);
  g.outline = &outlines_[g.id];
  g.advance = advances_[g.id];
  return g;
}

Contour make_midpoints_explicit(const Contour& contour) {
  Contour out;
  out.reserve(contour.size() * 2);
  const std::size_t n = contour.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = contour[i];
    const auto& q = contour[(i + 1) % n];
    out.push_back(p);
    if (n > 1 && !p.on_curve && !q.on_curve) out.push_back({0.5 * (p.pos + q.pos), true});
  }
  return out;
}

}  // namespace gm::font
