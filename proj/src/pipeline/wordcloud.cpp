#include "pipeline/wordcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace gm::pipeline {

namespace {

constexpr double kPaddingPx = 2.0;
constexpr double kSpiralStepRad = 0.05;
constexpr double kSpiralMaxRad = 400.0;

struct Box {
  double x0, y0, x1, y1;  // pixels

  bool overlaps(const Box& o) const { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }
  bool inside(double w, double h) const { return x0 >= 0 && y0 >= 0 && x1 <= w && y1 <= h; }
};

// Outline of a single word in pixels, centered on the origin, unit height.
struct WordShape {
  font::GlyphControlSet controls;
  std::vector<Vec2> unit_px;  // per point, box height 1
  double aspect = 1.0;        // width / height
};

WordShape shape_word(const font::Font& font, const std::string& text, font::CanvasSpec canvas,
                     std::vector<std::string>* warnings) {
  auto laid = font::layout_text(font, text, canvas, 0.0);
  if (warnings) warnings->insert(warnings->end(), laid.warnings.begin(), laid.warnings.end());
  WordShape shape;
  shape.controls = std::move(laid.controls);
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::vector<Vec2> px;
  for (auto p : shape.controls.points) {
    Vec2 q{p.x * canvas.width, p.y * canvas.height};
    x0 = std::min(x0, q.x);
    x1 = std::max(x1, q.x);
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
    px.push_back(q);
  }
  const double h = std::max(y1 - y0, 1e-9);
  shape.aspect = (x1 - x0) / h;
  const Vec2 mid{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  for (auto q : px) shape.unit_px.push_back((1.0 / h) * (q - mid));
  return shape;
}

Box box_of(const WordPlacement& w, double aspect, font::CanvasSpec canvas) {
  const double h = w.size * canvas.height;
  const double cx = w.center.x * canvas.width, cy = w.center.y * canvas.height;
  return {cx - 0.5 * h * aspect, cy - 0.5 * h, cx + 0.5 * h * aspect, cy + 0.5 * h};
}

std::vector<std::string> overlap_warnings(const std::vector<WordPlacement>& words, const std::vector<Box>& boxes) {
  std::vector<std::string> out;
  for (std::size_t a = 0; a < boxes.size(); ++a)
    for (std::size_t b = a + 1; b < boxes.size(); ++b)
      if (boxes[a].overlaps(boxes[b]))
        out.push_back("words '" + words[a].text + "' and '" + words[b].text + "' overlap");
  return out;
}

}  // namespace

std::vector<WordPlacement> word_layout_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::Config, "unsupported word layout version");
    std::vector<WordPlacement> out;
    for (const auto& w : doc.at("words")) {
      WordPlacement p{w.at("text").get<std::string>(), {w.at("x").get<double>(), w.at("y").get<double>()},
                      w.at("size").get<double>()};
      if (!(p.size > 0.0 && p.size <= 1.0)) throw Error(ErrorCode::Config, "word size must be in (0, 1]");
      if (!(p.center.x >= 0 && p.center.x <= 1 && p.center.y >= 0 && p.center.y <= 1))
        throw Error(ErrorCode::Config, "word center must lie in [0,1]^2");
      out.push_back(std::move(p));
    }
    if (out.empty()) throw Error(ErrorCode::Config, "word layout has no words");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed word layout: ") + e.what());
  }
}

nlohmann::json to_json(const std::vector<WordPlacement>& words) {
  auto list = nlohmann::json::array();
  for (const auto& w : words) list.push_back({{"text", w.text}, {"x", w.center.x}, {"y", w.center.y}, {"size", w.size}});
  return {{"version", 1}, {"words", list}};
}

std::vector<WordPlacement> spiral_layout(const font::Font& font, const std::vector<std::string>& words,
                                         font::CanvasSpec canvas, std::vector<std::string>* warnings) {
  if (words.empty()) throw Error(ErrorCode::Layout, "no drawable glyphs: word list is empty");
  std::vector<WordPlacement> placed;
  std::vector<Box> boxes;
  const double unit = 0.005 * std::min(canvas.width, canvas.height);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double aspect = shape_word(font, words[i], canvas, nullptr).aspect;
    WordPlacement w{words[i], {0.5, 0.5}, std::max(0.05, 0.16 * std::pow(0.85, double(i)))};
    // Keep the word narrower than the canvas.
    w.size = std::min(w.size, 0.9 * canvas.width / (aspect * canvas.height));
    bool found = false;
    for (double t = 0.0; t <= kSpiralMaxRad; t += kSpiralStepRad) {
      const double r = unit * t;
      w.center = {(0.5 * canvas.width + r * std::cos(t)) / canvas.width,
                  (0.5 * canvas.height + r * std::sin(t)) / canvas.height};
      Box b = box_of(w, aspect, canvas);
      Box padded{b.x0 - kPaddingPx, b.y0 - kPaddingPx, b.x1 + kPaddingPx, b.y1 + kPaddingPx};
      if (!b.inside(canvas.width, canvas.height)) continue;
      if (std::any_of(boxes.begin(), boxes.end(), [&](const Box& o) { return padded.overlaps(o); })) continue;
      found = true;
      boxes.push_back(b);
      break;
    }
    if (!found) {
      w.center = {0.5, 0.5};
      boxes.push_back(box_of(w, aspect, canvas));
      if (warnings) warnings->push_back("no free spot for word '" + w.text + "'; placed at the center");
    }
    placed.push_back(std::move(w));
  }
  return placed;
}

WordCloud build_word_cloud(const font::Font& font, const std::vector<WordPlacement>& words, font::CanvasSpec canvas) {
  if (words.empty()) throw Error(ErrorCode::Layout, "no drawable glyphs: word list is empty");
  WordCloud cloud;
  cloud.words = words;
  std::vector<Box> boxes;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    const auto& w = words[wi];
    WordShape shape = shape_word(font, w.text, canvas, &cloud.warnings);
    boxes.push_back(box_of(w, shape.aspect, canvas));
    const double h = w.size * canvas.height;
    const Vec2 center_px{w.center.x * canvas.width, w.center.y * canvas.height};
    const std::size_t offset = cloud.controls.points.size();
    for (std::size_t j = 0; j < shape.unit_px.size(); ++j) {
      Vec2 q = center_px + h * shape.unit_px[j];
      cloud.controls.points.push_back({q.x / canvas.width, q.y / canvas.height});
      cloud.controls.on_curve.push_back(shape.controls.on_curve[j]);
      cloud.word_of_point.push_back(wi);
    }
    for (auto g : shape.controls.glyphs) {
      g.first_point += offset;
      for (auto& c : g.contours) c.start += offset;
      cloud.controls.glyphs.push_back(std::move(g));
    }
    cloud.anchors.push_back(w.center);
  }
  auto overlaps = overlap_warnings(words, boxes);
  cloud.warnings.insert(cloud.warnings.end(), overlaps.begin(), overlaps.end());
  return cloud;
}

PointGrid word_positions(const WordCloud& cloud, const PointGrid& anchors) {
  if (anchors.rows() != cloud.anchors.size())
    throw Error(ErrorCode::InvalidArgument, "anchor trajectory does not match the word count");
  PointGrid out(cloud.controls.total_points(), anchors.frames());
  for (std::size_t j = 0; j < out.rows(); ++j) {
    const std::size_t w = cloud.word_of_point[j];
    for (std::size_t f = 0; f < out.frames(); ++f)
      out.at(j, f) = cloud.controls.points[j] + (anchors.at(w, f) - anchors.at(w, 0));
  }
  return out;
}

}  // namespace gm::pipeline
