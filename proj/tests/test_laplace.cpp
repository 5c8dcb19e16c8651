#include <algorithm>
#include <numeric>
#include <random>

#include "align/align.hpp"
#include "common/error.hpp"
#include "doctest.h"
#include "font/layout.hpp"
#include "laplace/kdtree.hpp"
#include "laplace/laplace.hpp"
#include "support.hpp"

using namespace gm;
using namespace gm::laplace;

namespace {

std::vector<std::size_t> brute_force_knn(const std::vector<Vec2>& pts, std::size_t j, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i == j) continue;
    double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
    all.push_back({dx * dx + dy * dy, i});
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < k; ++a) out.push_back(all[a].second);
  return out;
}

std::vector<Vec2> random_points(std::mt19937& rng, std::size_t m, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec2> pts(m);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

std::vector<Vec2> perturbed(std::mt19937& rng, const std::vector<Vec2>& base, double amount) {
  std::normal_distribution<double> n(0.0, amount);
  auto out = base;
  for (auto& p : out) p += Vec2{n(rng), n(rng)};
  return out;
}

double relative_gradient_error(const FrameObjective& obj, const std::vector<Vec2>& x) {
  std::vector<Vec2> grad;
  obj.gradient(x, grad);
  const double h = 1e-6;
  double diff2 = 0, ref2 = 0;
  auto probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (int axis = 0; axis < 2; ++axis) {
      double& c = axis == 0 ? probe[j].x : probe[j].y;
      const double orig = c;
      c = orig + h;
      const double up = obj.value(probe);
      c = orig - h;
      const double down = obj.value(probe);
      c = orig;
      const double fd = (up - down) / (2 * h);
      const double an = axis == 0 ? grad[j].x : grad[j].y;
      diff2 += (an - fd) * (an - fd);
      ref2 += fd * fd;
    }
  }
  return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-30);
}

// Scalar restatement of the neighbor weight and Laplacian formulas for one point.
Vec2 scalar_laplacian(Vec2 c, const std::vector<Vec2>& nb) {
  double inv[8], total = 0;
  for (std::size_t a = 0; a < nb.size(); ++a) {
    double dx = nb[a].x - c.x, dy = nb[a].y - c.y;
    inv[a] = 1.0 / (dx * dx + dy * dy);
    total += inv[a];
  }
  double lx = -c.x, ly = -c.y;
  for (std::size_t a = 0; a < nb.size(); ++a) {
    lx += inv[a] / total * nb[a].x;
    ly += inv[a] / total * nb[a].y;
  }
  return {lx, ly};
}

}  // namespace

TEST_CASE("kd-tree neighbors equal the brute-force scan") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 4 + rng() % 400;
    auto pts = random_points(rng, m);
    if (trial % 4 == 0)  // snap to a coarse grid to force distance ties
      for (auto& p : pts) p = {std::round(p.x * 8) / 8, std::round(p.y * 8) / 8};
    auto graph = build_neighbor_graph(pts, 3);
    for (std::size_t j = 0; j < m; ++j) {
      auto expect = brute_force_knn(pts, j, 3);
      REQUIRE(std::equal(expect.begin(), expect.end(), graph.row(j)));
    }
  }
  auto r200 = random_points(rng, 200);
  auto graph = build_neighbor_graph(r200, 3);
  for (std::size_t j = 0; j < 200; ++j) {
    auto expect = brute_force_knn(r200, j, 3);
    CHECK(std::equal(expect.begin(), expect.end(), graph.row(j)));
  }
}

TEST_CASE("collinear points and duplicates") {
  std::vector<Vec2> line{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  auto g = build_neighbor_graph(line, 2);
  CHECK(g.row(0)[0] == 1);
  CHECK(g.row(0)[1] == 2);
  CHECK(g.row(3)[0] == 2);
  CHECK(g.row(3)[1] == 1);

  std::vector<Vec2> dup{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.9, 0.9}};
  auto d = build_neighbor_graph(dup, 3);
  CHECK(std::vector<std::size_t>(d.row(0), d.row(0) + 3) == std::vector<std::size_t>{1, 2, 3});
  CHECK(std::vector<std::size_t>(d.row(2), d.row(2) + 3) == std::vector<std::size_t>{0, 1, 3});
  CHECK(std::vector<std::size_t>(d.row(4), d.row(4) + 3) == std::vector<std::size_t>{0, 1, 2});

  for (std::size_t j = 0; j < d.size(); ++j)
    for (std::size_t a = 0; a < 3; ++a) CHECK(d.row(j)[a] != j);

  CHECK_THROWS_AS(build_neighbor_graph(line, 4), Error);
  CHECK_THROWS_AS(build_neighbor_graph(line, 0), Error);
}

TEST_CASE("Laplacian coordinate examples") {
  std::vector<Vec2> sym{{0.5, 0.5}, {0.4, 0.5}, {0.6, 0.5}};
  auto g = build_neighbor_graph(sym, 2);
  auto w = neighbor_weights(sym, g);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));
  auto lap = laplacian_coords(sym, g, sym);
  CHECK(std::abs(lap[0].x) < 1e-15);
  CHECK(std::abs(lap[0].y) < 1e-15);

  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(rng, 30);
    auto graph = build_neighbor_graph(pts, 3);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      double sum = 0;
      for (std::size_t a = 0; a < 3; ++a) sum += neighbor_weights(pts, graph)[j * 3 + a];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
    auto moved = pts;
    for (auto& p : moved) p += Vec2{0.3, -0.1};
    auto a = laplacian_coords(pts, graph, pts);
    auto b = laplacian_coords(moved, graph, moved);
    for (std::size_t j = 0; j < pts.size(); ++j) CHECK(distance(a[j], b[j]) < 1e-12);
  }
}

TEST_CASE("asymmetric three-neighbor case matches the scalar formulas") {
  std::vector<Vec2> pts{{0.2, 0.3}, {0.25, 0.42}, {0.05, 0.31}, {0.33, 0.2}};
  auto g = build_neighbor_graph(pts, 3);
  auto lap = laplacian_coords(pts, g, pts);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    std::vector<Vec2> nb;
    for (std::size_t a = 0; a < 3; ++a) nb.push_back(pts[g.row(j)[a]]);
    Vec2 expect = scalar_laplacian(pts[j], nb);
    CHECK(lap[j].x == doctest::Approx(expect.x).epsilon(1e-13));
    CHECK(lap[j].y == doctest::Approx(expect.y).epsilon(1e-13));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937 rng(7);
  for (std::size_t m : {10, 50, 200}) {
    for (double e : {1.5, 2.0, 3.0}) {
      auto initial = random_points(rng, m, 0.1, 0.9);
      auto graph = build_neighbor_graph(initial, 3);
      auto raw = perturbed(rng, initial, 0.02);
      FrameObjective obj(raw, initial, graph, 2.0, e);
      for (int it = 0; it < 5; ++it) {
        auto x = perturbed(rng, raw, 0.01);
        CAPTURE(m);
        CAPTURE(e);
        CHECK(relative_gradient_error(obj, x) < 1e-4);
      }
    }
  }
}

TEST_CASE("optimizer descends monotonically and never ends above the start") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 12; ++trial) {
    auto initial = random_points(rng, 60, 0.1, 0.9);
    auto graph = build_neighbor_graph(initial, 3);
    auto raw = perturbed(rng, initial, 0.03);
    DeformParams params;
    params.alpha = double(trial % 4);
    params.e = trial % 3 == 0 ? 1.5 : (trial % 3 == 1 ? 2.0 : 3.0);
    auto r = optimize_frame(raw, initial, graph, params);
    REQUIRE(r.loss_history.size() >= 1);
    for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1]);
    CHECK(r.total_loss <= r.loss_history.front());
    CHECK(r.iterations <= 200);
    CHECK(r.total_loss == doctest::Approx(params.alpha * r.glyph_loss + r.motion_loss));
  }
}

TEST_CASE("alpha zero returns the raw frame bit for bit") {
  std::mt19937 rng(9);
  auto initial = random_points(rng, 80);
  auto graph = build_neighbor_graph(initial, 3);
  auto raw = perturbed(rng, initial, 0.05);
  DeformParams params;
  params.alpha = 0.0;
  CHECK(optimize_frame(raw, initial, graph, params).positions == raw);
}

TEST_CASE("rigid translation is a fixpoint") {
  std::mt19937 rng(10);
  auto initial = random_points(rng, 120, 0.2, 0.7);
  auto graph = build_neighbor_graph(initial, 3);
  auto raw = initial;
  for (auto& p : raw) p += Vec2{0.0731, -0.0443};
  auto r = optimize_frame(raw, initial, graph, DeformParams{});
  CHECK(r.loss_history.front() < 1e-12);
  for (std::size_t j = 0; j < raw.size(); ++j) CHECK(distance(r.positions[j], raw[j]) <= 1e-9);
}

TEST_CASE("non-finite input is reported with the iteration") {
  std::vector<Vec2> initial{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}};
  auto graph = build_neighbor_graph(initial, 3);
  auto raw = initial;
  raw[2].x = std::numeric_limits<double>::infinity();
  try {
    optimize_frame(raw, initial, graph, DeformParams{});
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(e.iteration() == 0);
  }
}

TEST_CASE("differentiated weights are not implemented") {
  std::vector<Vec2> initial{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  auto graph = build_neighbor_graph(initial, 3);
  DeformParams params;
  params.optimizer.weight_mode = WeightMode::Differentiated;
  try {
    optimize_frame(initial, initial, graph, params);
    FAIL("expected unimplemented");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unimplemented);
  }
}

namespace {

struct FixtureRun {
  font::GlyphControlSet controls;
  align::ControlTrajectory trajectory;
  std::vector<FrameReport> reports;
};

FixtureRun run_fixture(const std::string& word, double alpha, unsigned threads = 0) {
  FixtureRun run;
  run.controls = font::layout_text(*gm::testing::bundled_font(), word, {256, 256}).controls;
  auto kp = motion::import_trajectories(gm::testing::read_json(gm::testing::data_path("fixtures/squash_wave.json")));
  DeformParams params;
  params.alpha = alpha;
  params.optimizer.threads = threads;
  run.trajectory = align::align_frames(run.controls.points, kp, params);
  auto graph = build_neighbor_graph(run.controls.points, 3);
  run.reports = optimize_all(run.trajectory, run.controls.points, graph, params).frames;
  return run;
}

double sum_glyph(const FixtureRun& r) {
  double s = 0;
  for (const auto& f : r.reports) s += f.glyph_loss;
  return s;
}

double sum_motion(const FixtureRun& r) {
  double s = 0;
  for (const auto& f : r.reports) s += f.motion_loss;
  return s;
}

}  // namespace

TEST_CASE("static trajectory is left alone") {
  auto controls = font::layout_text(*gm::testing::bundled_font(), "sleepy", {256, 256}).controls;
  motion::KeypointTrajectorySet kp;
  kp.positions = PointGrid(10, 4);
  std::mt19937 rng(3);
  auto anchors = random_points(rng, 10);
  for (std::size_t f = 0; f < 4; ++f) kp.positions.set_frame(f, anchors);
  auto traj = align::align_frames(controls.points, kp, DeformParams{});
  auto graph = build_neighbor_graph(controls.points, 3);
  optimize_all(traj, controls.points, graph, DeformParams{});
  CHECK(traj.optimized == traj.raw);
}

TEST_CASE("glyph loss on sleepy is smaller at alpha 2 than at alpha 0") {
  auto a0 = run_fixture("sleepy", 0.0);
  auto a2 = run_fixture("sleepy", 2.0);
  CHECK(sum_glyph(a2) < sum_glyph(a0));
  CHECK(a0.trajectory.optimized == a0.trajectory.raw);
}

TEST_CASE("large alpha keeps the glyph shape and gives up motion") {
  auto raw = run_fixture("sleepy", 0.0);
  auto stiff = run_fixture("sleepy", 100.0);
  for (std::size_t f = 1; f < stiff.reports.size(); ++f) {
    CAPTURE(f);
    CHECK(stiff.reports[f].glyph_loss < 0.05 * raw.reports[f].glyph_loss);
    CHECK(stiff.reports[f].motion_loss > 0.0);
  }
}

TEST_CASE("frames give identical results sequentially and concurrently") {
  auto seq = run_fixture("wakey", 2.0, 1);
  auto par = run_fixture("wakey", 2.0, 4);
  CHECK(seq.trajectory.optimized == par.trajectory.optimized);
  for (std::size_t f = 0; f < seq.reports.size(); ++f) CHECK(seq.reports[f].loss_history == par.reports[f].loss_history);
}
