#pragma once

#include <cstdint>
#include <vector>

namespace gm {

struct Rgba8 {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  friend constexpr bool operator==(Rgba8, Rgba8) = default;
};

constexpr std::uint32_t pack_rgb(Rgba8 c) { return std::uint32_t(c.r) << 16 | std::uint32_t(c.g) << 8 | c.b; }
constexpr Rgba8 unpack_rgb(std::uint32_t v) {
  return {std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v), 255};
}

/// Packed 8-bit RGBA raster, row-major, top row first.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgba8 fill = {0, 0, 0, 0})
      : width_(width), height_(height), pixels_(std::size_t(width) * std::size_t(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgba8& at(int x, int y) { return pixels_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  Rgba8 at(int x, int y) const { return pixels_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }

  const std::vector<Rgba8>& pixels() const { return pixels_; }
  std::vector<Rgba8>& pixels() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgba8> pixels_;
};

}  // namespace gm
