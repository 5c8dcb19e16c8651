#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/geometry.hpp"
#include "font/layout.hpp"

namespace gm::pipeline {

/// A word placed as a rigid unit. `center` is normalized; `size` is the
/// height of the word's outline box as a fraction of the canvas height.
struct WordPlacement {
  std::string text;
  Vec2 center;
  double size = 0.1;
};

struct WordCloud {
  std::vector<WordPlacement> words;
  font::GlyphControlSet controls;        // all words concatenated
  std::vector<std::size_t> word_of_point;  // per control point
  std::vector<Vec2> anchors;             // one per word: its box center
  std::vector<std::string> warnings;
};

/// Word layout file: {"version": 1, "words": [{"text", "x", "y", "size"}]}.
std::vector<WordPlacement> word_layout_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const std::vector<WordPlacement>& words);

/// Places words one by one on an Archimedean spiral around the canvas
/// center, shrinking later words, until each box is inside the canvas and
/// clear of the earlier ones.
std::vector<WordPlacement> spiral_layout(const font::Font& font, const std::vector<std::string>& words,
                                         font::CanvasSpec canvas, std::vector<std::string>* warnings = nullptr);

/// Lays out every word and scales it into its box. Overlapping boxes produce
/// warnings.
WordCloud build_word_cloud(const font::Font& font, const std::vector<WordPlacement>& words, font::CanvasSpec canvas);

/// Moves every word's points by its anchor's displacement from frame 0.
PointGrid word_positions(const WordCloud& cloud, const PointGrid& anchor_trajectory);

}  // namespace gm::pipeline
