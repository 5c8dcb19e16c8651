#pragma once

#include <span>
#include <vector>

#include "align/params.hpp"
#include "common/geometry.hpp"
#include "motion/trajectory.hpp"

namespace gm::align {

/// Distances below this are clamped before exponentiation.
inline constexpr double kDistanceClamp = 1e-6;

/// Normalized inverse-distance weights w_i proportional to 1 / |point - anchor_i|^e.
std::vector<double> interpolation_weights(Vec2 point, std::span<const Vec2> anchors, double e);

/// Pre- and post-optimization control trajectories, M x F. Frame 0 of `raw`
/// is C^0.
struct ControlTrajectory {
  PointGrid raw;
  PointGrid optimized;
};

/// C_j^f = C_j^0 + sum_i w_i(C_j^0) (X_i^f - X_i^0), with weights from the
/// first-frame geometry reused for every frame.
ControlTrajectory align_frames(const std::vector<Vec2>& controls, const motion::KeypointTrajectorySet& keypoints,
                               const DeformParams& params);

nlohmann::json grid_to_json(const PointGrid& grid);

}  // namespace gm::align
