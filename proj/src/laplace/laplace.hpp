#pragma once

#include <vector>

#include "align/align.hpp"
#include "align/params.hpp"
#include "common/geometry.hpp"

namespace gm::laplace {

/// K nearest neighbors of each control point in C^0, fixed for all frames.
struct NeighborGraph {
  std::size_t k = 0;
  std::vector<std::size_t> neighbors;  // M * k, row j sorted nearest first

  std::size_t size() const { return k ? neighbors.size() / k : 0; }
  const std::size_t* row(std::size_t j) const { return neighbors.data() + j * k; }
};

/// Exact K-NN via a 2-d tree; ties go to the lower index.
NeighborGraph build_neighbor_graph(const std::vector<Vec2>& points, std::size_t k);

/// omega_jk proportional to 1 / |C_k - C_j|^2 (distance clamped at 1e-6),
/// normalized per row. Returned as M * k, aligned with graph.neighbors.
std::vector<double> neighbor_weights(const std::vector<Vec2>& positions, const NeighborGraph& graph);

/// L_j = sum_k omega_jk C_k - C_j, with omega computed from `weight_positions`.
std::vector<Vec2> laplacian_coords(const std::vector<Vec2>& positions, const NeighborGraph& graph,
                                   const std::vector<Vec2>& weight_positions);
std::vector<Vec2> laplacian_coords(const std::vector<Vec2>& positions, const NeighborGraph& graph,
                                   const std::vector<double>& weights);

/// |r|^e, smoothed as (|r|^2 + eps)^(e/2) - eps^(e/2) when e < 2.
double norm_power(Vec2 r, double e);
Vec2 norm_power_gradient(Vec2 r, double e);
inline constexpr double kNormSmoothing = 1e-12;

/// L_total(C') = alpha * sum_j |L_j(C') - L_j(C^0)|^e + sum_j |C'_j - C^f_j|^e
/// for one frame, with neighbor weights frozen at the raw frame.
class FrameObjective {
 public:
  FrameObjective(const std::vector<Vec2>& raw_frame, const std::vector<Vec2>& initial, const NeighborGraph& graph,
                 double alpha, double e);

  struct Terms {
    double glyph = 0.0;
    double motion = 0.0;
    double total = 0.0;
  };

  Terms evaluate(const std::vector<Vec2>& x) const;
  double value(const std::vector<Vec2>& x) const { return evaluate(x).total; }
  /// Writes dL_total/dC' into `grad` (resized to M).
  void gradient(const std::vector<Vec2>& x, std::vector<Vec2>& grad) const;

  const std::vector<Vec2>& raw() const { return raw_; }

 private:
  const std::vector<Vec2>& raw_;
  const NeighborGraph& graph_;
  double alpha_;
  double e_;
  std::vector<double> weights_;      // frozen at raw_frame
  std::vector<Vec2> target_laplacian_;  // L(C^0) with weights from C^0
};

struct FrameReport {
  std::vector<Vec2> positions;
  double glyph_loss = 0.0;
  double motion_loss = 0.0;
  double total_loss = 0.0;
  int iterations = 0;
  std::vector<double> loss_history;  // accepted iterates, starting at the raw frame
  double wall_ms = 0.0;
};

/// Gradient descent with backtracking (halve from the initial step until
/// the loss decreases), started at the raw frame.
FrameReport optimize_frame(const std::vector<Vec2>& raw_frame, const std::vector<Vec2>& initial,
                           const NeighborGraph& graph, const DeformParams& params);

struct OptimizeAllResult {
  std::vector<FrameReport> frames;  // one per frame; frame 0 passes through
};

/// Fills `trajectory.optimized` frame by frame. Frames are independent and
/// may run concurrently; results do not depend on scheduling.
OptimizeAllResult optimize_all(align::ControlTrajectory& trajectory, const std::vector<Vec2>& initial,
                               const NeighborGraph& graph, const DeformParams& params);

}  // namespace gm::laplace
