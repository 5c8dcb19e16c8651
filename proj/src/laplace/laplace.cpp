#include "laplace/laplace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "laplace/kdtree.hpp"

namespace gm::laplace {

namespace {
constexpr double kWeightDistanceClamp = 1e-6;
constexpr int kMaxHalvings = 60;
}  // namespace

NeighborGraph build_neighbor_graph(const std::vector<Vec2>& points, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "neighbor count must be at least 1");
  if (points.size() <= k)
    throw Error(ErrorCode::InvalidArgument, "need more than k = " + std::to_string(k) + " control points, got " +
                                                std::to_string(points.size()));
  KdTree tree(points);
  NeighborGraph graph;
  graph.k = k;
  graph.neighbors.reserve(points.size() * k);
  for (std::size_t j = 0; j < points.size(); ++j) {
    auto row = tree.nearest(points[j], k, j);
    graph.neighbors.insert(graph.neighbors.end(), row.begin(), row.end());
  }
  return graph;
}

std::vector<double> neighbor_weights(const std::vector<Vec2>& positions, const NeighborGraph& graph) {
  const std::size_t m = graph.size();
  if (positions.size() != m) throw Error(ErrorCode::InvalidArgument, "positions do not match neighbor graph size");
  std::vector<double> w(m * graph.k);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t* nb = graph.row(j);
    double total = 0.0;
    for (std::size_t a = 0; a < graph.k; ++a) {
      double d = std::max(distance(positions[nb[a]], positions[j]), kWeightDistanceClamp);
      w[j * graph.k + a] = 1.0 / (d * d);
      total += w[j * graph.k + a];
    }
    for (std::size_t a = 0; a < graph.k; ++a) w[j * graph.k + a] /= total;
  }
  return w;
}

std::vector<Vec2> laplacian_coords(const std::vector<Vec2>& positions, const NeighborGraph& graph,
                                   const std::vector<double>& weights) {
  const std::size_t m = graph.size();
  if (positions.size() != m || weights.size() != m * graph.k)
    throw Error(ErrorCode::InvalidArgument, "positions or weights do not match neighbor graph size");
  std::vector<Vec2> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t* nb = graph.row(j);
    Vec2 avg;
    for (std::size_t a = 0; a < graph.k; ++a) avg += weights[j * graph.k + a] * positions[nb[a]];
    out[j] = avg - positions[j];
  }
  return out;
}

std::vector<Vec2> laplacian_coords(const std::vector<Vec2>& positions, const NeighborGraph& graph,
                                   const std::vector<Vec2>& weight_positions) {
  return laplacian_coords(positions, graph, neighbor_weights(weight_positions, graph));
}

double norm_power(Vec2 r, double e) {
  const double s = squared_norm(r);
  if (e < 2.0) return std::pow(s + kNormSmoothing, 0.5 * e) - std::pow(kNormSmoothing, 0.5 * e);
  if (e == 2.0) return s;
  return std::pow(s, 0.5 * e);
}

Vec2 norm_power_gradient(Vec2 r, double e) {
  const double s = squared_norm(r);
  if (e < 2.0) return (e * std::pow(s + kNormSmoothing, 0.5 * e - 1.0)) * r;
  if (e == 2.0) return 2.0 * r;
  return (e * std::pow(s, 0.5 * e - 1.0)) * r;
}

FrameObjective::FrameObjective(const std::vector<Vec2>& raw_frame, const std::vector<Vec2>& initial,
                               const NeighborGraph& graph, double alpha, double e)
    : raw_(raw_frame), graph_(graph), alpha_(alpha), e_(e) {
  if (raw_frame.size() != graph.size() || initial.size() != graph.size())
    throw Error(ErrorCode::InvalidArgument, "frame size does not match neighbor graph");
  weights_ = neighbor_weights(raw_frame, graph);
  target_laplacian_ = laplacian_coords(initial, graph, neighbor_weights(initial, graph));
}

FrameObjective::Terms FrameObjective::evaluate(const std::vector<Vec2>& x) const {
  Terms t;
  const std::size_t m = graph_.size();
  const std::size_t k = graph_.k;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t* nb = graph_.row(j);
    Vec2 lap;
    for (std::size_t a = 0; a < k; ++a) lap += weights_[j * k + a] * x[nb[a]];
    lap -= x[j];
    t.glyph += norm_power(lap - target_laplacian_[j], e_);
    t.motion += norm_power(x[j] - raw_[j], e_);
  }
  t.total = alpha_ * t.glyph + t.motion;
  return t;
}

void FrameObjective::gradient(const std::vector<Vec2>& x, std::vector<Vec2>& grad) const {
  const std::size_t m = graph_.size();
  const std::size_t k = graph_.k;
  grad.assign(m, Vec2{});
  for (std::size_t j = 0; j < m; ++j) {
    grad[j] += norm_power_gradient(x[j] - raw_[j], e_);
    if (alpha_ == 0.0) continue;
    const std::size_t* nb = graph_.row(j);
    Vec2 lap;
    for (std::size_t a = 0; a < k; ++a) lap += weights_[j * k + a] * x[nb[a]];
    lap -= x[j];
    const Vec2 g = alpha_ * norm_power_gradient(lap - target_laplacian_[j], e_);
    grad[j] -= g;
    for (std::size_t a = 0; a < k; ++a) grad[nb[a]] += weights_[j * k + a] * g;
  }
}

FrameReport optimize_frame(const std::vector<Vec2>& raw_frame, const std::vector<Vec2>& initial,
                           const NeighborGraph& graph, const DeformParams& params) {
  const auto started = std::chrono::steady_clock::now();
  if (params.optimizer.weight_mode != WeightMode::FrozenAtRaw)
    throw Error(ErrorCode::Unimplemented, "differentiated neighbor weights are not implemented; use \"frozen\"");
  if (!(params.alpha >= 0.0)) throw Error(ErrorCode::Config, "alpha must be >= 0");

  FrameObjective objective(raw_frame, initial, graph, params.alpha, params.e);
  FrameReport report;
  std::vector<Vec2> x = raw_frame;
  FrameObjective::Terms terms = objective.evaluate(x);
  if (!std::isfinite(terms.total)) throw NumericError(0, "non-finite loss");
  report.loss_history.push_back(terms.total);

  std::vector<Vec2> grad, trial(x.size());
  for (int it = 1; it <= params.optimizer.max_iterations && terms.total > 0.0; ++it) {
    objective.gradient(x, grad);
    double gnorm2 = 0.0;
    for (auto g : grad) gnorm2 += squared_norm(g);
    if (gnorm2 == 0.0) break;

    double step = params.optimizer.initial_step;
    bool accepted = false;
    FrameObjective::Terms next;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      for (std::size_t j = 0; j < x.size(); ++j) trial[j] = x[j] - step * grad[j];
      next = objective.evaluate(trial);
      if (!std::isfinite(next.total)) throw NumericError(it, "non-finite loss");
      if (next.total < terms.total) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no descent at machine precision: stationary

    const double change = (terms.total - next.total) / terms.total;
    x.swap(trial);
    terms = next;
    report.iterations = it;
    report.loss_history.push_back(terms.total);
    if (change < params.optimizer.tolerance) break;
  }

  report.positions = std::move(x);
  report.glyph_loss = terms.glyph;
  report.motion_loss = terms.motion;
  report.total_loss = terms.total;
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return report;
}

OptimizeAllResult optimize_all(align::ControlTrajectory& trajectory, const std::vector<Vec2>& initial,
                               const NeighborGraph& graph, const DeformParams& params) {
  const std::size_t m = trajectory.raw.rows();
  const std::size_t frames = trajectory.raw.frames();
  if (m != initial.size() || m != graph.size())
    throw Error(ErrorCode::InvalidArgument, "trajectory, initial points and graph disagree on M");
  trajectory.optimized = PointGrid(m, frames);
  OptimizeAllResult result;
  result.frames.resize(frames);
  if (frames == 0) return result;

  // Frame 0 is C^0: both loss terms are zero there.
  result.frames[0].positions = trajectory.raw.frame(0);
  result.frames[0].loss_history = {0.0};
  trajectory.optimized.set_frame(0, result.frames[0].positions);

  const unsigned threads = params.optimizer.threads ? params.optimizer.threads : default_thread_count();
  parallel_for(frames - 1, threads, [&](std::size_t idx) {
    const std::size_t f = idx + 1;
    result.frames[f] = optimize_frame(trajectory.raw.frame(f), initial, graph, params);
  });
  for (std::size_t f = 1; f < frames; ++f) trajectory.optimized.set_frame(f, result.frames[f].positions);
  return result;
}

}  // namespace gm::laplace
