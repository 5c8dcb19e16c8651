#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/geometry.hpp"
#include "gif/gif.hpp"

namespace gm::motion {

enum class TrajectorySource { Extracted, Imported, UserCorrected };

const char* to_string(TrajectorySource source);
TrajectorySource source_from_string(const std::string& name);

/// N x F keypoint positions X_i^f in normalized [0,1]^2 canvas coordinates.
/// Row i is the same tracked keypoint in every frame.
struct KeypointTrajectorySet {
  PointGrid positions;
  TrajectorySource source = TrajectorySource::Extracted;

  std::size_t n() const { return positions.rows(); }
  std::size_t f() const { return positions.frames(); }
};

struct TrackerOptions {
  int keypoints = 10;
  double threshold = 40.0;  // Euclidean RGB distance from the background color
  int max_iterations = 50;
  double tolerance = 1e-4;  // normalized units
};

struct ExtractResult {
  KeypointTrajectorySet trajectory;
  std::vector<std::string> warnings;
};

/// Classical foreground tracker: per-frame background/foreground split,
/// k-means keypoints warm-started from the previous frame, identities kept
/// by optimal assignment. No randomness.
ExtractResult extract_keypoints(const gif::FrameSequence& frames, const TrackerOptions& options = {});

/// Trajectory file schema, version 1:
///   {"version": 1, "n": N, "f": F, "source": "...", "positions": [[[x, y], ...F], ...N]}
nlohmann::json export_trajectories(const KeypointTrajectorySet& trajectory);
KeypointTrajectorySet import_trajectories(const nlohmann::json& doc);
KeypointTrajectorySet import_trajectories(const std::string& text);

/// Throws gm::Error(Trajectory) naming the first (i, f) (1-based) that is
/// non-finite or outside [0,1]^2.
void validate(const KeypointTrajectorySet& trajectory);

/// Minimum-total-cost perfect matching on an n x n row-major cost matrix.
/// Returns column assigned to each row.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n);

}  // namespace gm::motion
