#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gm {

/// Which keypoint trajectory drives the deformation: the driving GIF's own
/// keypoints, or keypoints re-detected on a rendered text animation.
enum class TrajectorySelector { DrivingGif, ExtractedText };

/// How the Laplacian neighbor weights behave during descent.
enum class WeightMode { FrozenAtRaw, Differentiated };

struct OptimizerSettings {
  int max_iterations = 200;
  double initial_step = 0.1;
  double tolerance = 1e-6;  // relative loss change
  WeightMode weight_mode = WeightMode::FrozenAtRaw;
  unsigned threads = 0;     // 0 = hardware concurrency

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

struct DeformParams {
  double alpha = 2.0;  // glyph-preservation weight
  double e = 2.0;      // locality / norm exponent, shared by alignment and loss
  int k_neighbors = 3;
  OptimizerSettings optimizer;
  TrajectorySelector trajectory_source = TrajectorySelector::DrivingGif;

  /// Human-readable invariant violations; empty when valid. Pass the control
  /// point count to also check K < M (0 skips that check).
  std::vector<std::string> violations(std::size_t control_points = 0) const;
  void validate(std::size_t control_points = 0) const;

  friend bool operator==(const DeformParams&, const DeformParams&) = default;
};

nlohmann::json to_json(const DeformParams& params);
/// Missing keys keep their defaults; unknown keys are rejected.
DeformParams params_from_json(const nlohmann::json& doc, DeformParams base = {});

const char* to_string(TrajectorySelector s);
const char* to_string(WeightMode m);

}  // namespace gm
