#pragma once

#include <cmath>
#include <vector>

namespace gm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double squared_norm(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(squared_norm(a)); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Row-major M x F grid of positions: `at(row, frame)`.
class PointGrid {
 public:
  PointGrid() = default;
  PointGrid(std::size_t rows, std::size_t frames) : rows_(rows), frames_(frames), data_(rows * frames) {}

  std::size_t rows() const { return rows_; }
  std::size_t frames() const { return frames_; }
  bool empty() const { return data_.empty(); }

  Vec2& at(std::size_t row, std::size_t frame) { return data_[row * frames_ + frame]; }
  const Vec2& at(std::size_t row, std::size_t frame) const { return data_[row * frames_ + frame]; }

  std::vector<Vec2> frame(std::size_t f) const {
    std::vector<Vec2> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, f);
    return out;
  }
  void set_frame(std::size_t f, const std::vector<Vec2>& pts) {
    for (std::size_t r = 0; r < rows_ && r < pts.size(); ++r) at(r, f) = pts[r];
  }

  friend bool operator==(const PointGrid&, const PointGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t frames_ = 0;
  std::vector<Vec2> data_;
};

}  // namespace gm
