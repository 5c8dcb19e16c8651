#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "common/image.hpp"

namespace gm::gif {

/// Fully composited animation frames. All frames share one size and are
/// opaque; delays are in centiseconds and always positive.
struct FrameSequence {
  std::vector<Image> frames;
  std::vector<int> delays_cs;
  int loop_count = 0;  // 0 = loop forever

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  std::size_t size() const { return frames.size(); }
};

/// Decodes a GIF87a/GIF89a stream. Transparent pixels end up composited over
/// the estimated background color. Throws gm::GifError with the byte offset
/// of the problem on malformed input.
FrameSequence decode_gif(std::span<const std::uint8_t> bytes);

/// Encodes a GIF89a with one global palette (exact when the frames use at
/// most 256 colors, median-cut otherwise) and a Netscape loop extension.
std::vector<std::uint8_t> encode_gif(const FrameSequence& sequence);

/// Most frequent color on the image border (ties go to the smaller packed
/// RGB value). Pixels with alpha 0 are skipped; returns white when no
/// opaque border pixel exists.
Rgba8 estimate_background(const Image& image);

/// Palette of at most `max_colors` entries for the given color histogram.
/// Exact when the histogram is small enough; median cut otherwise.
std::vector<Rgba8> build_palette(const std::vector<std::pair<std::uint32_t, std::uint64_t>>& histogram,
                                 std::size_t max_colors = 256);

}  // namespace gm::gif
