#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "motion/trajectory.hpp"

namespace gm::motion {

namespace {

std::vector<Vec2> foreground_pixels(const Image& frame, double threshold) {
  const Rgba8 bg = gif::estimate_background(frame);
  const double t2 = threshold * threshold;
  const double inv_w = 1.0 / frame.width(), inv_h = 1.0 / frame.height();
  std::vector<Vec2> out;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      Rgba8 c = frame.at(x, y);
      double dr = double(c.r) - bg.r, dg = double(c.g) - bg.g, db = double(c.b) - bg.b;
      if (dr * dr + dg * dg + db * db > t2) out.push_back({(x + 0.5) * inv_w, (y + 0.5) * inv_h});
    }
  }
  return out;
}

Vec2 centroid(const std::vector<Vec2>& pts) {
  Vec2 sum;
  for (auto p : pts) sum += p;
  return sum * (1.0 / double(pts.size()));
}

// Greedy farthest-point seeds. The foreground centroid acts as the first
// reference point but is not itself a seed.
std::vector<Vec2> farthest_point_seeds(const std::vector<Vec2>& pts, std::size_t k) {
  const Vec2 center = centroid(pts);
  std::vector<double> nearest(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) nearest[i] = squared_norm(pts[i] - center);
  std::vector<Vec2> seeds;
  while (seeds.size() < k) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (nearest[i] > nearest[best]) best = i;
    seeds.push_back(pts[best]);
    for (std::size_t i = 0; i < pts.size(); ++i) nearest[i] = std::min(nearest[i], squared_norm(pts[i] - pts[best]));
  }
  return seeds;
}

void lloyd(const std::vector<Vec2>& pts, std::vector<Vec2>& centers, int max_iterations, double tolerance) {
  const std::size_t k = centers.size();
  std::vector<Vec2> sums(k);
  std::vector<std::size_t> counts(k);
  std::vector<double> own_distance(pts.size());
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(sums.begin(), sums.end(), Vec2{});
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t pi = 0; pi < pts.size(); ++pi) {
      const Vec2 p = pts[pi];
      std::size_t best = 0;
      double best_d = squared_norm(p - centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        double d = squared_norm(p - centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      sums[best] += p;
      ++counts[best];
      own_distance[pi] = best_d;
    }
    double max_move = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      Vec2 next;
      if (counts[c] > 0) {
        next = sums[c] * (1.0 / double(counts[c]));
      } else {
        // Empty cluster: restart it at the worst-served pixel.
        std::size_t worst = 0;
        for (std::size_t pi = 1; pi < pts.size(); ++pi)
          if (own_distance[pi] > own_distance[worst]) worst = pi;
        next = pts[worst];
        own_distance[worst] = 0.0;
      }
      max_move = std::max(max_move, distance(next, centers[c]));
      centers[c] = next;
    }
    if (max_move < tolerance) break;
  }
}

Vec2 clamp_unit(Vec2 p) { return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)}; }

}  // namespace

ExtractResult extract_keypoints(const gif::FrameSequence& frames, const TrackerOptions& options) {
  if (frames.frames.empty()) throw Error(ErrorCode::InvalidArgument, "cannot extract keypoints from zero frames");
  if (options.keypoints < 1) throw Error(ErrorCode::InvalidArgument, "keypoint count must be at least 1");
  if (options.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "k-means needs at least one iteration");
  const auto n = std::size_t(options.keypoints);
  const std::size_t frame_count = frames.frames.size();

  ExtractResult result;
  result.trajectory.positions = PointGrid(n, frame_count);
  result.trajectory.source = TrajectorySource::Extracted;
  std::vector<Vec2> previous;
  Vec2 previous_center;

  for (std::size_t f = 0; f < frame_count; ++f) {
    const auto pts = foreground_pixels(frames.frames[f], options.threshold);
    std::vector<Vec2> keypoints;
    Vec2 center;
    if (!pts.empty()) center = centroid(pts);
    if (pts.empty()) {
      if (f == 0) throw Error(ErrorCode::InvalidArgument, "no foreground detected in frame 1");
      result.warnings.push_back("frame " + std::to_string(f + 1) +
                                ": no foreground detected, keypoints carried over from the previous frame");
      keypoints = previous;
    } else if (f == 0) {
      keypoints = farthest_point_seeds(pts, n);
      lloyd(pts, keypoints, options.max_iterations, options.tolerance);
    } else {
      // Warm start from the previous keypoints, moved with the foreground.
      const Vec2 shift = center - previous_center;
      std::vector<Vec2> centers = previous;
      for (auto& c : centers) c += shift;
      lloyd(pts, centers, options.max_iterations, options.tolerance);
      std::vector<double> cost(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < n; ++c) cost[i * n + c] = distance(previous[i], centers[c]);
      const auto match = solve_assignment(cost, n);
      keypoints.resize(n);
      for (std::size_t i = 0; i < n; ++i) keypoints[i] = centers[match[i]];
    }
    for (std::size_t i = 0; i < n; ++i) result.trajectory.positions.at(i, f) = clamp_unit(keypoints[i]);
    previous = keypoints;
    if (!pts.empty()) previous_center = center;
  }
  return result;
}

}  // namespace gm::motion
