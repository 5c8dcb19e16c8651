#include <random>

#include "align/align.hpp"
#include "align/params.hpp"
#include "common/error.hpp"
#include "doctest.h"

using namespace gm;
using namespace gm::align;

namespace {

motion::KeypointTrajectorySet random_keypoints(std::mt19937& rng, std::size_t n, std::size_t frames) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  motion::KeypointTrajectorySet t;
  t.positions = PointGrid(n, frames);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < frames; ++f) t.positions.at(i, f) = {u(rng), u(rng)};
  return t;
}

std::vector<Vec2> random_points(std::mt19937& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(m);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

}  // namespace

TEST_CASE("interpolation weight examples") {
  std::vector<Vec2> one{{0.3, 0.3}};
  CHECK(interpolation_weights({0.9, 0.1}, one, 2.0) == std::vector<double>{1.0});

  std::vector<Vec2> two{{0.4, 0.5}, {0.6, 0.5}};
  for (double e : {0.5, 1.0, 2.0, 7.0}) {
    auto w = interpolation_weights({0.5, 0.9}, two, e);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));
  }

  std::vector<Vec2> line{{0.1, 0.0}, {0.3, 0.0}};
  auto w = interpolation_weights({0.0, 0.0}, line, 1.0);
  CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-14));

  // A point on top of an anchor takes (almost) all of its weight.
  auto snap = interpolation_weights({0.1, 0.0}, line, 2.0);
  CHECK(snap[0] > 1.0 - 1e-9);
  CHECK(std::isfinite(snap[1]));
}

TEST_CASE("equidistant control point moves by half of one keypoint's displacement") {
  motion::KeypointTrajectorySet t;
  t.positions = PointGrid(2, 2);
  t.positions.at(0, 0) = {0.4, 0.5};
  t.positions.at(1, 0) = {0.6, 0.5};
  t.positions.at(0, 1) = {0.42, 0.5};
  t.positions.at(1, 1) = {0.6, 0.5};
  auto traj = align_frames({{0.5, 0.2}}, t, DeformParams{});
  CHECK(traj.raw.at(0, 1).x == doctest::Approx(0.51).epsilon(1e-14));
  CHECK(traj.raw.at(0, 1).y == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("alignment algebra on random configurations") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> ue(0.5, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 12, m = 1 + rng() % 60, frames = 1 + rng() % 6;
    auto kp = random_keypoints(rng, n, frames);
    auto controls = random_points(rng, m);
    DeformParams params;
    params.e = ue(rng);
    auto anchors = kp.positions.frame(0);
    for (auto c : controls) {
      double sum = 0;
      for (double w : interpolation_weights(c, anchors, params.e)) sum += w;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    auto traj = align_frames(controls, kp, params);
    for (std::size_t j = 0; j < m; ++j) CHECK(traj.raw.at(j, 0) == controls[j]);

    const std::size_t f = rng() % frames;
    Vec2 delta{0.03 * double(trial % 5) - 0.06, 0.017};
    auto shifted = kp;
    for (std::size_t i = 0; i < n; ++i) shifted.positions.at(i, f) += delta;
    auto traj2 = align_frames(controls, shifted, params);
    if (f == 0) continue;  // shifting the reference frame changes the weights
    for (std::size_t j = 0; j < m; ++j) {
      Vec2 d = traj2.raw.at(j, f) - traj.raw.at(j, f) - delta;
      CHECK(std::abs(d.x) <= 1e-12);
      CHECK(std::abs(d.y) <= 1e-12);
    }
  }
}

TEST_CASE("common displacement moves every control point by exactly that amount") {
  std::mt19937 rng(5);
  auto kp = random_keypoints(rng, 10, 2);
  Vec2 delta{0.0625, -0.125};
  for (std::size_t i = 0; i < 10; ++i) kp.positions.at(i, 1) = kp.positions.at(i, 0) + delta;
  auto controls = random_points(rng, 40);
  auto traj = align_frames(controls, kp, DeformParams{});
  for (std::size_t j = 0; j < 40; ++j) {
    Vec2 d = traj.raw.at(j, 1) - controls[j] - delta;
    CHECK(std::abs(d.x) <= 1e-12);
    CHECK(std::abs(d.y) <= 1e-12);
  }
}

TEST_CASE("large exponent approaches the nearest keypoint's displacement") {
  std::mt19937 rng(99);
  DeformParams params;
  params.e = 16.0;
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto kp = random_keypoints(rng, 6, 2);
    auto controls = random_points(rng, 30);
    auto traj = align_frames(controls, kp, params);
    for (std::size_t j = 0; j < controls.size(); ++j) {
      std::size_t near = 0, second = 0;
      double d1 = 1e9, d2 = 1e9;
      for (std::size_t i = 0; i < 6; ++i) {
        double d = distance(controls[j], kp.positions.at(i, 0));
        if (d < d1) {
          d2 = d1;
          second = near;
          d1 = d;
          near = i;
        } else if (d < d2) {
          d2 = d;
          second = i;
        }
      }
      (void)second;
      // Skip near-ties, where no single keypoint dominates at any finite e.
      if (d2 / d1 < 1.8) continue;
      ++checked;
      Vec2 expect = controls[j] + kp.positions.at(near, 1) - kp.positions.at(near, 0);
      CHECK(distance(traj.raw.at(j, 1), expect) <= 1e-3);
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("alignment is deterministic and thread-count independent") {
  std::mt19937 rng(8);
  auto kp = random_keypoints(rng, 10, 9);
  auto controls = random_points(rng, 300);
  DeformParams one;
  one.optimizer.threads = 1;
  DeformParams many;
  many.optimizer.threads = 4;
  CHECK(align_frames(controls, kp, one).raw == align_frames(controls, kp, many).raw);
}

TEST_CASE("alignment rejects bad input") {
  std::mt19937 rng(1);
  auto kp = random_keypoints(rng, 3, 2);
  CHECK_THROWS_AS(align_frames({}, kp, DeformParams{}), Error);
  DeformParams text_side;
  text_side.trajectory_source = TrajectorySelector::ExtractedText;
  try {
    align_frames({{0.5, 0.5}}, kp, text_side);
    FAIL("expected unimplemented");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unimplemented);
  }
}

TEST_CASE("parameter validation and JSON") {
  DeformParams p;
  CHECK(p.alpha == 2.0);
  CHECK(p.e == 2.0);
  CHECK(p.k_neighbors == 3);
  CHECK(p.violations(100).empty());
  p.alpha = -1;
  p.e = 0;
  p.k_neighbors = 5;
  CHECK(p.violations(5).size() == 3);
  CHECK_THROWS_AS(p.validate(5), Error);

  DeformParams q;
  q.alpha = 4.5;
  q.trajectory_source = TrajectorySelector::ExtractedText;
  CHECK(params_from_json(to_json(q)) == q);
  CHECK_THROWS_AS(params_from_json(nlohmann::json{{"alpah", 1}}), Error);
  CHECK(params_from_json(nlohmann::json{{"alpha", 0}}).alpha == 0.0);
}
