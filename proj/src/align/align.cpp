#include "align/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "common/parallel.hpp"

namespace gm::align {

std::vector<double> interpolation_weights(Vec2 point, std::span<const Vec2> anchors, double e) {
  if (anchors.empty()) throw Error(ErrorCode::InvalidArgument, "interpolation needs at least one anchor");
  if (!(e > 0.0)) throw Error(ErrorCode::InvalidArgument, "interpolation exponent must be > 0");
  std::vector<double> dist(anchors.size());
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    dist[i] = std::max(distance(point, anchors[i]), kDistanceClamp);
    nearest = std::min(nearest, dist[i]);
  }
  // (nearest / d_i)^e is the same ratio as d_i^-e but cannot overflow.
  std::vector<double> w(anchors.size());
  double total = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    w[i] = std::pow(nearest / dist[i], e);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

ControlTrajectory align_frames(const std::vector<Vec2>& controls, const motion::KeypointTrajectorySet& keypoints,
                               const DeformParams& params) {
  const std::size_t m = controls.size();
  const std::size_t n = keypoints.n();
  const std::size_t frames = keypoints.f();
  if (m == 0 || n == 0 || frames == 0)
    throw Error(ErrorCode::InvalidArgument, "alignment needs at least one control point, keypoint and frame");
  if (!(params.e > 0.0)) throw Error(ErrorCode::Config, "e must be > 0");
  if (params.trajectory_source != TrajectorySelector::DrivingGif)
    throw Error(ErrorCode::Unimplemented,
                "trajectory source 'extracted_text' is not implemented; use 'driving_gif'");

  const std::vector<Vec2> reference = keypoints.positions.frame(0);
  std::vector<double> weights(m * n);
  for (std::size_t j = 0; j < m; ++j) {
    auto w = interpolation_weights(controls[j], reference, params.e);
    std::copy(w.begin(), w.end(), weights.begin() + std::ptrdiff_t(j * n));
  }

  ControlTrajectory out;
  out.raw = PointGrid(m, frames);
  for (std::size_t j = 0; j < m; ++j) out.raw.at(j, 0) = controls[j];
  unsigned threads = params.optimizer.threads ? params.optimizer.threads : default_thread_count();
  parallel_for(frames > 0 ? frames - 1 : 0, threads, [&](std::size_t idx) {
    const std::size_t f = idx + 1;
    std::vector<Vec2> shift(n);
    for (std::size_t i = 0; i < n; ++i) shift[i] = keypoints.positions.at(i, f) - reference[i];
    for (std::size_t j = 0; j < m; ++j) {
      Vec2 d;
      const double* w = &weights[j * n];
      for (std::size_t i = 0; i < n; ++i) d += w[i] * shift[i];
      out.raw.at(j, f) = controls[j] + d;
    }
  });
  return out;
}

nlohmann::json grid_to_json(const PointGrid& grid) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["n"] = grid.rows();
  doc["f"] = grid.frames();
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (std::size_t f = 0; f < grid.frames(); ++f) row.push_back({grid.at(r, f).x, grid.at(r, f).y});
    rows.push_back(std::move(row));
  }
  doc["positions"] = std::move(rows);
  return doc;
}

}  // namespace gm::align
