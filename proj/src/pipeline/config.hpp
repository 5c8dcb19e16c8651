#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "align/params.hpp"
#include "common/image.hpp"

namespace gm::pipeline {

enum class Mode { GlyphControlPoints, WordAnchors };

const char* to_string(Mode mode);

/// One run of the engine. Flags and config files share this schema; see
/// `config_from_json` for the key names.
struct PipelineConfig {
  std::string text;
  std::filesystem::path font_path;
  Mode mode = Mode::GlyphControlPoints;

  // Motion source: exactly one of these.
  std::optional<std::filesystem::path> gif_path;
  std::optional<std::filesystem::path> trajectory_path;

  DeformParams params;
  int keypoints = 10;
  bool seedless = true;  // the tracker never uses random seeds; kept for the CLI flag

  // Canvas defaults to the GIF size, or 256x256 with a trajectory.
  std::optional<int> width;
  std::optional<int> height;
  double margin = 0.1;
  Rgba8 background{255, 255, 255, 255};
  Rgba8 fill{0, 0, 0, 255};
  int supersample = 4;
  double tolerance_px = 0.25;
  // Empty: copy the GIF's delays (10cs with a trajectory). One value applies
  // to every frame; otherwise one value per frame.
  std::vector<int> delays_cs;

  std::optional<std::filesystem::path> control_edits_path;  // glyph mode only
  std::optional<std::filesystem::path> word_layout_path;    // word mode only

  std::optional<std::filesystem::path> out_gif;
  std::optional<std::filesystem::path> svg_dir;
  std::optional<std::filesystem::path> report_path;

  /// Throws gm::Error(Config) listing every problem found.
  void validate() const;
};

/// Reads a config document. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected. Keys:
///   text, font, mode ("glyph" | "wordcloud"), gif, trajectory, alpha, e, k,
///   n, max_iterations, step, tolerance, weights, trajectory_source, threads,
///   seedless, width, height, margin, background, fill, supersample,
///   flatten_tolerance, delay_cs (int or list), control_edits, word_layout,
///   out, svg_dir, report
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {},
                                PipelineConfig base = {});
nlohmann::json to_json(const PipelineConfig& config);

Rgba8 parse_color(const std::string& text);
std::string format_color(Rgba8 color);

}  // namespace gm::pipeline
