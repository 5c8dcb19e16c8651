#include <algorithm>
#include <array>
#include <cstring>
#include <map>

#include "common/error.hpp"
#include "gif/gif.hpp"

namespace gm::gif {

namespace {

constexpr std::size_t kMaxCanvasPixels = std::size_t(1) << 26;
constexpr int kMaxLzwBits = 12;
constexpr int kDefaultDelayCs = 10;

enum Disposal { kUnspecified = 0, kKeep = 1, kRestoreBackground = 2, kRestorePrevious = 3 };

class ByteStream {
 public:
  explicit ByteStream(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ >= data_.size(); }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16le() {
    need(2);
    std::uint16_t v = std::uint16_t(data_[pos_] | data_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw GifError(pos_, "truncated stream");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<Rgba8> read_color_table(ByteStream& in, int size_bits) {
  std::vector<Rgba8> table(std::size_t(1) << (size_bits + 1));
  for (auto& c : table) {
    auto rgb = in.bytes(3);
    c = {rgb[0], rgb[1], rgb[2], 255};
  }
  return table;
}

void skip_sub_blocks(ByteStream& in) {
  for (;;) {
    std::uint8_t len = in.u8();
    if (len == 0) return;
    in.bytes(len);
  }
}

/// Concatenated image sub-block payload plus the file offset of each byte.
struct ImageData {
  std::vector<std::uint8_t> bytes;
  std::vector<std::size_t> offsets;
};

ImageData read_image_data(ByteStream& in) {
  ImageData d;
  for (;;) {
    std::uint8_t len = in.u8();
    if (len == 0) return d;
    std::size_t start = in.offset();
    auto chunk = in.bytes(len);
    d.bytes.insert(d.bytes.end(), chunk.begin(), chunk.end());
    for (std::size_t i = 0; i < len; ++i) d.offsets.push_back(start + i);
  }
}

std::vector<std::uint8_t> lzw_decode(const ImageData& data, int min_code_size, std::size_t pixel_count,
                                     std::size_t block_offset) {
  if (min_code_size < 2 || min_code_size > 11) throw GifError(block_offset, "invalid LZW minimum code size");
  const int clear = 1 << min_code_size;
  const int eoi = clear + 1;

  std::array<std::uint16_t, 4096> prefix{};
  std::array<std::uint8_t, 4096> suffix{};
  std::array<std::uint8_t, 4096> first_byte{};
  std::array<std::uint16_t, 4096> length{};
  for (int i = 0; i < clear; ++i) {
    suffix[i] = std::uint8_t(i);
    first_byte[i] = std::uint8_t(i);
    length[i] = 1;
  }

  std::vector<std::uint8_t> out;
  out.reserve(pixel_count);
  int code_size = min_code_size + 1;
  int next = clear + 2;
  int prev = -1;
  std::size_t bit_pos = 0;
  const std::size_t total_bits = data.bytes.size() * 8;
  auto where = [&] {
    std::size_t byte = std::min(bit_pos / 8, data.offsets.empty() ? 0 : data.offsets.size() - 1);
    return data.offsets.empty() ? block_offset : data.offsets[byte];
  };

  std::vector<std::uint8_t> scratch(4096);
  auto emit = [&](int code) {
    int n = length[code];
    for (int i = n - 1; i >= 0; --i) {
      scratch[std::size_t(i)] = suffix[code];
      code = prefix[code];
    }
    std::size_t take = std::min<std::size_t>(std::size_t(n), pixel_count - std::min(pixel_count, out.size()));
    out.insert(out.end(), scratch.begin(), scratch.begin() + std::ptrdiff_t(take));
  };

  while (out.size() < pixel_count) {
    if (bit_pos + std::size_t(code_size) > total_bits)
      throw GifError(where(), "LZW data ended after " + std::to_string(out.size()) + " of " +
                                  std::to_string(pixel_count) + " pixels");
    int code = 0;
    for (int b = 0; b < code_size; ++b, ++bit_pos)
      code |= ((data.bytes[bit_pos >> 3] >> (bit_pos & 7)) & 1) << b;

    if (code == clear) {
      code_size = min_code_size + 1;
      next = clear + 2;
      prev = -1;
      continue;
    }
    if (code == eoi) break;
    if (prev < 0) {
      if (code >= clear) throw GifError(where(), "LZW stream starts with undefined code " + std::to_string(code));
      emit(code);
      prev = code;
      continue;
    }
    std::uint8_t head;
    if (code < next) {
      head = first_byte[code];
    } else if (code == next) {
      head = first_byte[prev];
    } else {
      throw GifError(where(), "LZW code " + std::to_string(code) + " out of range");
    }
    if (next < 4096) {
      prefix[next] = std::uint16_t(prev);
      suffix[next] = code < next ? head : first_byte[prev];
      first_byte[next] = first_byte[prev];
      length[next] = std::uint16_t(length[prev] + 1);
      ++next;
      if (next == (1 << code_size) && code_size < kMaxLzwBits) ++code_size;
    }
    emit(code);
    prev = code;
  }
  if (out.size() < pixel_count)
    throw GifError(where(), "image data ended after " + std::to_string(out.size()) + " of " +
                                std::to_string(pixel_count) + " pixels");
  return out;
}

struct GraphicControl {
  int disposal = kUnspecified;
  int delay_cs = 0;
  bool has_transparency = false;
  std::uint8_t transparent_index = 0;
};

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
};

void clear_rect(Image& canvas, const Rect& r) {
  int x1 = std::min(canvas.width(), r.x + r.w);
  int y1 = std::min(canvas.height(), r.y + r.h);
  for (int y = r.y; y < y1; ++y)
    for (int x = r.x; x < x1; ++x) canvas.at(x, y) = {0, 0, 0, 0};
}

}  // namespace

Rgba8 estimate_background(const Image& image) {
  std::map<std::uint32_t, std::size_t> counts;
  const int w = image.width(), h = image.height();
  auto visit = [&](int x, int y) {
    Rgba8 c = image.at(x, y);
    if (c.a != 0) ++counts[pack_rgb(c)];
  };
  for (int x = 0; x < w; ++x) {
    visit(x, 0);
    if (h > 1) visit(x, h - 1);
  }
  for (int y = 1; y + 1 < h; ++y) {
    visit(0, y);
    if (w > 1) visit(w - 1, y);
  }
  if (counts.empty()) return {255, 255, 255, 255};
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return unpack_rgb(best->first);
}

FrameSequence decode_gif(std::span<const std::uint8_t> bytes) {
  ByteStream in(bytes);
  auto sig = in.bytes(6);
  if (std::memcmp(sig.data(), "GIF87a", 6) != 0 && std::memcmp(sig.data(), "GIF89a", 6) != 0)
    throw GifError(0, "missing GIF87a/GIF89a signature");

  const int width = in.u16le();
  const int height = in.u16le();
  const std::uint8_t packed = in.u8();
  in.u8();  // background index: transparent areas are estimated from the border instead
  in.u8();  // aspect ratio
  if (width == 0 || height == 0) throw GifError(6, "zero canvas dimension");
  if (std::size_t(width) * std::size_t(height) > kMaxCanvasPixels) throw GifError(6, "canvas too large");

  std::vector<Rgba8> global_table;
  if (packed & 0x80) global_table = read_color_table(in, packed & 0x07);

  FrameSequence seq;
  Image canvas(width, height, {0, 0, 0, 0});
  GraphicControl gce;
  int pending_disposal = kUnspecified;
  Rect pending_rect;

  for (;;) {
    if (in.at_end()) {
      // A missing trailer after complete frames is common in the wild.
      if (seq.frames.empty()) throw GifError(in.offset(), "truncated stream: no image data");
      break;
    }
    const std::size_t block_at = in.offset();
    const std::uint8_t introducer = in.u8();
    if (introducer == 0x3B) {
      if (seq.frames.empty()) throw GifError(block_at, "trailer before any image");
      break;
    }
    if (introducer == 0x21) {
      const std::uint8_t label = in.u8();
      if (label == 0xF9) {
        std::uint8_t len = in.u8();
        if (len < 4) throw GifError(block_at, "short graphic control extension");
        auto body = in.bytes(len);
        gce.disposal = (body[0] >> 2) & 0x07;
        gce.has_transparency = body[0] & 0x01;
        gce.delay_cs = body[1] | body[2] << 8;
        gce.transparent_index = body[3];
        skip_sub_blocks(in);
      } else if (label == 0xFF) {
        std::uint8_t len = in.u8();
        auto app = in.bytes(len);
        bool netscape = len == 11 && (std::memcmp(app.data(), "NETSCAPE2.0", 11) == 0 ||
                                      std::memcmp(app.data(), "ANIMEXTS1.0", 11) == 0);
        for (;;) {
          std::uint8_t sub = in.u8();
          if (sub == 0) break;
          auto body = in.bytes(sub);
          if (netscape && sub >= 3 && body[0] == 1) seq.loop_count = body[1] | body[2] << 8;
        }
      } else {
        skip_sub_blocks(in);
      }
      continue;
    }
    if (introducer != 0x2C) throw GifError(block_at, "unknown block introducer");

    Rect rect;
    rect.x = in.u16le();
    rect.y = in.u16le();
    rect.w = in.u16le();
    rect.h = in.u16le();
    const std::uint8_t flags = in.u8();
    std::vector<Rgba8> local_table;
    if (flags & 0x80) local_table = read_color_table(in, flags & 0x07);
    const bool interlaced = flags & 0x40;
    const auto& table = local_table.empty() ? global_table : local_table;
    if (table.empty()) throw GifError(block_at, "image has no color table");
    if (std::size_t(rect.w) * std::size_t(rect.h) > kMaxCanvasPixels) throw GifError(block_at, "frame too large");

    const std::size_t lzw_at = in.offset();
    const int min_code_size = in.u8();
    ImageData data = read_image_data(in);
    auto indices = lzw_decode(data, min_code_size, std::size_t(rect.w) * std::size_t(rect.h), lzw_at);

    // Dispose the previous frame before drawing this one.
    if (pending_disposal == kRestoreBackground || pending_disposal == kRestorePrevious)
      clear_rect(canvas, pending_rect);

    auto row_of = [&](int pass_row) {
      if (!interlaced) return pass_row;
      static constexpr int starts[4] = {0, 4, 2, 1};
      static constexpr int steps[4] = {8, 8, 4, 2};
      int r = pass_row;
      for (int p = 0; p < 4; ++p) {
        int rows_in_pass = rect.h > starts[p] ? (rect.h - starts[p] + steps[p] - 1) / steps[p] : 0;
        if (r < rows_in_pass) return starts[p] + r * steps[p];
        r -= rows_in_pass;
      }
      return 0;
    };
    for (int r = 0; r < rect.h; ++r) {
      const int y = rect.y + row_of(r);
      if (y >= height) continue;
      for (int c = 0; c < rect.w; ++c) {
        const int x = rect.x + c;
        if (x >= width) continue;
        const std::uint8_t idx = indices[std::size_t(r) * std::size_t(rect.w) + std::size_t(c)];
        if (gce.has_transparency && idx == gce.transparent_index) continue;
        canvas.at(x, y) = idx < table.size() ? table[idx] : Rgba8{0, 0, 0, 255};
      }
    }
    seq.frames.push_back(canvas);
    seq.delays_cs.push_back(gce.delay_cs > 0 ? gce.delay_cs : kDefaultDelayCs);
    pending_disposal = gce.disposal;
    pending_rect = rect;
    gce = GraphicControl{};
  }

  const Rgba8 background = estimate_background(seq.frames.front());
  for (auto& frame : seq.frames)
    for (auto& px : frame.pixels())
      if (px.a != 255) px = background;
  return seq;
}

}  // namespace gm::gif
