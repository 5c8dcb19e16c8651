#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "common/error.hpp"
#include "gif/gif.hpp"

namespace gm::gif {

namespace {

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(int code, int bits) {
    acc_ |= std::uint32_t(code) << nbits_;
    nbits_ += bits;
    while (nbits_ >= 8) {
      push(std::uint8_t(acc_ & 0xFF));
      acc_ >>= 8;
      nbits_ -= 8;
    }
  }

  void finish() {
    if (nbits_ > 0) push(std::uint8_t(acc_ & 0xFF));
    acc_ = 0;
    nbits_ = 0;
    flush_block();
    out_.push_back(0);  // block terminator
  }

 private:
  void push(std::uint8_t b) {
    block_.push_back(b);
    if (block_.size() == 255) flush_block();
  }
  void flush_block() {
    if (block_.empty()) return;
    out_.push_back(std::uint8_t(block_.size()));
    out_.insert(out_.end(), block_.begin(), block_.end());
    block_.clear();
  }

  std::vector<std::uint8_t>& out_;
  std::vector<std::uint8_t> block_;
  std::uint32_t acc_ = 0;
  int nbits_ = 0;
};

void lzw_encode(const std::vector<std::uint8_t>& indices, int min_code_size, std::vector<std::uint8_t>& out) {
  out.push_back(std::uint8_t(min_code_size));
  BitWriter bits(out);
  const int clear = 1 << min_code_size;
  const int eoi = clear + 1;
  int code_size = min_code_size + 1;
  int next = clear + 2;
  std::unordered_map<std::uint32_t, std::uint16_t> dict;
  dict.reserve(8192);

  bits.put(clear, code_size);
  if (indices.empty()) {
    bits.put(eoi, code_size);
    bits.finish();
    return;
  }
  int prefix = indices[0];
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const std::uint8_t k = indices[i];
    const std::uint32_t key = std::uint32_t(prefix) << 8 | k;
    if (auto it = dict.find(key); it != dict.end()) {
      prefix = it->second;
      continue;
    }
    bits.put(prefix, code_size);
    dict.emplace(key, std::uint16_t(next));
    ++next;
    // Widen once next passes the current code space.
    if (next > (1 << code_size) && code_size < 12) ++code_size;
    if (next == 4096) {
      bits.put(clear, code_size);
      dict.clear();
      code_size = min_code_size + 1;
      next = clear + 2;
    }
    prefix = k;
  }
  bits.put(prefix, code_size);
  bits.put(eoi, code_size);
  bits.finish();
}

void put_u16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(std::uint8_t(v & 0xFF));
  out.push_back(std::uint8_t((v >> 8) & 0xFF));
}

struct Box {
  std::size_t begin, end;  // into the shared color list
};

}  // namespace

std::vector<Rgba8> build_palette(const std::vector<std::pair<std::uint32_t, std::uint64_t>>& histogram,
                                 std::size_t max_colors) {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> colors = histogram;
  std::sort(colors.begin(), colors.end());
  if (colors.size() <= max_colors) {
    std::vector<Rgba8> palette;
    for (auto [rgb, count] : colors) palette.push_back(unpack_rgb(rgb));
    return palette;
  }

  auto channel = [](std::uint32_t rgb, int ch) { return int((rgb >> (16 - 8 * ch)) & 0xFF); };
  auto widest = [&](const Box& box, int& range) {
    int best = 0;
    range = -1;
    for (int ch = 0; ch < 3; ++ch) {
      int lo = 255, hi = 0;
      for (std::size_t i = box.begin; i < box.end; ++i) {
        lo = std::min(lo, channel(colors[i].first, ch));
        hi = std::max(hi, channel(colors[i].first, ch));
      }
      if (hi - lo > range) {
        range = hi - lo;
        best = ch;
      }
    }
    return best;
  };

  std::vector<Box> boxes{{0, colors.size()}};
  while (boxes.size() < max_colors) {
    // Split the box with the widest channel range; population breaks ties.
    std::size_t pick = boxes.size();
    int pick_range = 0;
    std::uint64_t pick_pop = 0;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (boxes[b].end - boxes[b].begin < 2) continue;
      int range;
      widest(boxes[b], range);
      std::uint64_t pop = 0;
      for (std::size_t i = boxes[b].begin; i < boxes[b].end; ++i) pop += colors[i].second;
      if (pick == boxes.size() || range > pick_range || (range == pick_range && pop > pick_pop)) {
        pick = b;
        pick_range = range;
        pick_pop = pop;
      }
    }
    if (pick == boxes.size()) break;
    Box box = boxes[pick];
    int range;
    int ch = widest(box, range);
    std::sort(colors.begin() + std::ptrdiff_t(box.begin), colors.begin() + std::ptrdiff_t(box.end),
              [&](const auto& a, const auto& b) {
                int ca = channel(a.first, ch), cb = channel(b.first, ch);
                return ca != cb ? ca < cb : a.first < b.first;
              });
    std::uint64_t half = pick_pop / 2, acc = 0;
    std::size_t split = box.begin + 1;
    for (std::size_t i = box.begin; i + 1 < box.end; ++i) {
      acc += colors[i].second;
      split = i + 1;
      if (acc >= half) break;
    }
    boxes[pick] = {box.begin, split};
    boxes.push_back({split, box.end});
  }

  std::vector<Rgba8> palette;
  for (const auto& box : boxes) {
    std::uint64_t sum[3] = {0, 0, 0}, pop = 0;
    for (std::size_t i = box.begin; i < box.end; ++i) {
      for (int ch = 0; ch < 3; ++ch) sum[ch] += std::uint64_t(channel(colors[i].first, ch)) * colors[i].second;
      pop += colors[i].second;
    }
    pop = std::max<std::uint64_t>(pop, 1);
    palette.push_back({std::uint8_t((sum[0] + pop / 2) / pop), std::uint8_t((sum[1] + pop / 2) / pop),
                       std::uint8_t((sum[2] + pop / 2) / pop), 255});
  }
  return palette;
}

std::vector<std::uint8_t> encode_gif(const FrameSequence& seq) {
  if (seq.frames.empty()) throw Error(ErrorCode::InvalidArgument, "cannot encode a GIF with zero frames");
  if (seq.delays_cs.size() != seq.frames.size())
    throw Error(ErrorCode::InvalidArgument, "delay count does not match frame count");
  const int width = seq.width(), height = seq.height();
  if (width <= 0 || height <= 0 || width > 65535 || height > 65535)
    throw Error(ErrorCode::InvalidArgument, "frame dimensions out of GIF range");
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    if (seq.frames[f].width() != width || seq.frames[f].height() != height)
      throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(f + 1) + " has different dimensions");
    if (seq.delays_cs[f] <= 0 || seq.delays_cs[f] > 65535)
      throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(f + 1) + " delay out of range");
  }

  std::unordered_map<std::uint32_t, std::uint64_t> counts;
  for (const auto& frame : seq.frames)
    for (const auto& px : frame.pixels()) ++counts[pack_rgb(px)];
  std::vector<std::pair<std::uint32_t, std::uint64_t>> histogram(counts.begin(), counts.end());
  const std::vector<Rgba8> palette = build_palette(histogram);

  std::unordered_map<std::uint32_t, std::uint8_t> lookup;
  lookup.reserve(counts.size());
  for (const auto& [rgb, count] : histogram) {
    Rgba8 c = unpack_rgb(rgb);
    int best = 0;
    long best_d = -1;
    for (std::size_t i = 0; i < palette.size(); ++i) {
      long dr = long(c.r) - palette[i].r, dg = long(c.g) - palette[i].g, db = long(c.b) - palette[i].b;
      long d = dr * dr + dg * dg + db * db;
      if (best_d < 0 || d < best_d) {
        best_d = d;
        best = int(i);
      }
    }
    lookup[rgb] = std::uint8_t(best);
  }

  int table_bits = 1;
  while ((std::size_t(1) << table_bits) < palette.size()) ++table_bits;
  const int min_code_size = std::max(2, table_bits);

  std::vector<std::uint8_t> out;
  const char* sig = "GIF89a";
  out.insert(out.end(), sig, sig + 6);
  put_u16(out, width);
  put_u16(out, height);
  out.push_back(std::uint8_t(0x80 | 0x70 | (table_bits - 1)));
  out.push_back(0);  // background index
  out.push_back(0);  // aspect
  for (std::size_t i = 0; i < (std::size_t(1) << table_bits); ++i) {
    Rgba8 c = i < palette.size() ? palette[i] : Rgba8{0, 0, 0, 255};
    out.push_back(c.r);
    out.push_back(c.g);
    out.push_back(c.b);
  }

  // NETSCAPE2.0 looping extension.
  out.insert(out.end(), {0x21, 0xFF, 0x0B});
  const char* app = "NETSCAPE2.0";
  out.insert(out.end(), app, app + 11);
  out.insert(out.end(), {0x03, 0x01});
  put_u16(out, seq.loop_count);
  out.push_back(0);

  std::vector<std::uint8_t> indices(std::size_t(width) * std::size_t(height));
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    out.insert(out.end(), {0x21, 0xF9, 0x04, 0x04});  // disposal: do not dispose
    put_u16(out, seq.delays_cs[f]);
    out.insert(out.end(), {0x00, 0x00});

    out.push_back(0x2C);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, width);
    put_u16(out, height);
    out.push_back(0);

    const auto& px = seq.frames[f].pixels();
    for (std::size_t i = 0; i < px.size(); ++i) indices[i] = lookup.at(pack_rgb(px[i]));
    lzw_encode(indices, min_code_size, out);
  }
  out.push_back(0x3B);
  return out;
}

}  // namespace gm::gif
