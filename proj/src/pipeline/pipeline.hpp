#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "align/align.hpp"
#include "font/layout.hpp"
#include "gif/gif.hpp"
#include "laplace/laplace.hpp"
#include "motion/trajectory.hpp"
#include "pipeline/config.hpp"
#include "raster/raster.hpp"

namespace gm::pipeline {

/// Per-frame time the engine aims for on a desktop CPU.
inline constexpr double kFrameBudgetMs = 300.0;

struct StageTiming {
  std::string stage;
  double wall_ms = 0.0;
};

struct PipelineResult {
  motion::KeypointTrajectorySet keypoints;
  font::GlyphControlSet controls;
  align::ControlTrajectory trajectory;  // word mode: one row per word anchor
  PointGrid rendered;                   // positions actually drawn, M x F
  std::vector<laplace::FrameReport> frame_reports;
  gif::FrameSequence frames;
  std::vector<std::uint8_t> gif;
  std::vector<std::pair<std::string, std::string>> svg;  // empty unless svg_dir is set
  std::vector<StageTiming> stages;
  std::vector<std::string> warnings;
  double total_ms = 0.0;

  double ms_per_frame() const { return frames.frames.empty() ? 0.0 : total_ms / double(frames.frames.size()); }
  /// Line-delimited JSON: config, warnings, stages, frames, summary.
  std::vector<nlohmann::json> report(const PipelineConfig& config) const;
  std::string report_text(const PipelineConfig& config) const;
};

/// decode -> extract/import -> layout -> align -> optimize -> render ->
/// encode. Nothing is written to disk. Config problems raise
/// gm::Error(Config); failures inside a stage raise gm::StageError.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Writes the requested outputs. Every file is staged next to its target
/// and renamed only after all of them were written.
void write_artifacts(const PipelineConfig& config, const PipelineResult& result);

raster::RenderSpec render_spec(const PipelineConfig& config, int width, int height);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
}  // namespace gm::pipeline
