#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "trigs/regularization.hpp"

using namespace trigs;

namespace {

Primitive at(const Vec3& mu, const Vec3& color = Vec3::Constant(0.5)) {
  Primitive p;
  p.mu = mu;
  p.color = color;
  return p;
}

Twist random_twist(std::mt19937_64& rng) {
  return {oracle::random_vec(rng), oracle::random_vec(rng)};
}

MotionParams random_params(std::mt19937_64& rng) {
  MotionParams m;
  m.twists = {random_twist(rng), random_twist(rng), random_twist(rng), random_twist(rng)};
  m.anchor = oracle::random_vec(rng);
  return m;
}

std::vector<Primitive> random_cloud(std::mt19937_64& rng, int n, double color_spread = 0.2) {
  std::vector<Primitive> out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    out.push_back(at(oracle::random_vec(rng, -1.0, 1.0),
                     Vec3::Constant(0.5) + color_spread * oracle::random_vec(rng)));
    out.back().profile.alpha = 0.05 + 0.9 * u(rng);
  }
  return out;
}

// O(n^2 log n) reference: sort all others by (distance, index).
NeighborGraph brute_force_knn(const std::vector<Primitive>& prims, int k) {
  NeighborGraph g;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < prims.size(); ++j) {
      if (j != i) others.push_back(j);
    }
    std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      return (prims[i].mu - prims[a].mu).norm() < (prims[i].mu - prims[b].mu).norm();
    });
    others.resize(std::min<std::size_t>(static_cast<std::size_t>(k), others.size()));
    g.neighbors.push_back(others);
  }
  return g;
}

}  // namespace

TEST_CASE("loss weight defaults") {
  LossWeights w;
  CHECK(w.w_reg == 0.01);
  CHECK(w.w_motion == 0.0001);
  CHECK(w.w_rigid == 1.0);
  CHECK(w.lambda_c == 50.0);
  CHECK(w.k_neighbors == 3);
  CHECK(w.valid());
  w.k_neighbors = 0;
  CHECK_FALSE(w.valid());
  w = LossWeights{};
  w.w_rigid = -1.0;
  CHECK_FALSE(w.valid());
}

TEST_CASE("motion smoothness examples") {
  BezierTwists b;
  b.ctrl0 = {Vec3(1, 2, 3), Vec3(0, 1, 0)};
  b.ctrl2 = {Vec3(3, 0, -1), Vec3(2, 1, 4)};
  b.ctrl1 = 0.5 * (b.ctrl0 + b.ctrl2);
  CHECK(motion_smoothness_loss(b) == doctest::Approx(0.0));

  BezierTwists c;
  c.ctrl1 = {Vec3(0.6, 0, 0), Vec3(0, 0.8, 0)};
  CHECK(motion_smoothness_loss(c) == doctest::Approx(4.0));

  std::mt19937_64 rng(1);
  const auto m = random_params(rng);
  BezierTwists s = m.twists;
  s.ctrl0 = 3.0 * s.ctrl0;
  s.ctrl1 = 3.0 * s.ctrl1;
  s.ctrl2 = 3.0 * s.ctrl2;
  CHECK(motion_smoothness_loss(s) == doctest::Approx(9.0 * motion_smoothness_loss(m.twists)));

  // The base twist does not enter.
  BezierTwists d = c;
  d.base = {Vec3(5, 5, 5), Vec3(1, 1, 1)};
  CHECK(motion_smoothness_loss(d) == motion_smoothness_loss(c));
}

TEST_CASE("scene smoothness is the mean and its gradient matches central differences") {
  std::mt19937_64 rng(2);
  std::vector<MotionParams> params;
  for (int i = 0; i < 5; ++i) params.push_back(random_params(rng));
  double sum = 0.0;
  for (const auto& p : params) sum += motion_smoothness_loss(p.twists);
  CHECK(motion_smoothness_loss(params) == doctest::Approx(sum / 5.0));
  CHECK(motion_smoothness_loss(std::span<const MotionParams>{}) == 0.0);

  std::vector<MotionVector> grad(params.size(), MotionVector::Zero());
  accumulate_motion_smoothness_gradient(params, grad, 1.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::function<double(const MotionVector&)> f = [&](const MotionVector& v) {
      auto copy = params;
      copy[i] = MotionParams::from_vector(v);
      return motion_smoothness_loss(copy);
    };
    const Eigen::VectorXd fd = oracle::central_gradient(f, params[i].to_vector());
    CHECK(oracle::relative_error(grad[i], fd, 1e-12) < 1e-6);
    CHECK(grad[i].segment<6>(0).isZero(0.0));
    CHECK(grad[i].segment<3>(24).isZero(0.0));
  }
}

TEST_CASE("color affinity") {
  const Vec3 c(0.2, 0.4, 0.6);
  CHECK(color_affinity(c, c, 50.0) == 1.0);
  const Vec3 d = c + Vec3(0.1, 0.1, 0.0);  // squared distance 0.02
  CHECK(color_affinity(c, d, 50.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(color_affinity(c, d, 50.0) == color_affinity(d, c, 50.0));
  CHECK(color_affinity(Vec3::Zero(), Vec3::Ones(), 0.0) == 1.0);
  const double v = color_affinity(Vec3::Zero(), Vec3::Ones(), 50.0);
  CHECK(v > 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("knn examples") {
  const std::vector<Primitive> line{at(Vec3(0, 0, 0)), at(Vec3(1, 0, 0)), at(Vec3(3, 0, 0))};
  const auto g = knn_canonical(line, 1);
  REQUIRE(g.size() == 3);
  CHECK(g.neighbors[0] == std::vector<std::size_t>{1});
  CHECK(g.neighbors[1] == std::vector<std::size_t>{0});
  CHECK(g.neighbors[2] == std::vector<std::size_t>{1});

  const auto all = knn_canonical(line, 7);
  CHECK(all.neighbors[0] == std::vector<std::size_t>{1, 2});
  CHECK(all.neighbors[1] == std::vector<std::size_t>{0, 2});
  CHECK(all.neighbors[2] == std::vector<std::size_t>{1, 0});

  // Equidistant neighbours resolve to the lower index.
  const std::vector<Primitive> sym{at(Vec3(1, 0, 0)), at(Vec3(0, 0, 0)), at(Vec3(-1, 0, 0))};
  CHECK(knn_canonical(sym, 1).neighbors[1] == std::vector<std::size_t>{0});

  CHECK_THROWS_AS(knn_canonical(std::vector<Primitive>{at(Vec3::Zero())}, 1), std::invalid_argument);
  CHECK_THROWS_AS(knn_canonical(line, 0), std::invalid_argument);
}

TEST_CASE("knn matches brute force on random clouds") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cloud = random_cloud(rng, 50);
    for (int k : {1, 3, 7}) {
      const auto g = knn_canonical(cloud, k);
      const auto ref = brute_force_knn(cloud, k);
      CHECK(g.neighbors == ref.neighbors);
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g.neighbors[i].size() == static_cast<std::size_t>(k));
        CHECK(std::find(g.neighbors[i].begin(), g.neighbors[i].end(), i) == g.neighbors[i].end());
      }
    }
  }
  // Lattice points produce many exact ties.
  std::vector<Primitive> grid;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) grid.push_back(at(Vec3(x, y, 0)));
  CHECK(knn_canonical(grid, 4).neighbors == brute_force_knn(grid, 4).neighbors);
}

TEST_CASE("rigid coherence examples") {
  std::mt19937_64 rng(4);
  const auto cloud = random_cloud(rng, 10);
  const auto g = knn_canonical(cloud, 3);
  const Twist shared = random_twist(rng);
  std::vector<MotionParams> same(cloud.size());
  for (auto& p : same) {
    p = random_params(rng);
    p.twists.base = shared;
  }
  CHECK(rigid_coherence_loss(cloud, same, g, 50.0) == 0.0);

  const std::vector<Primitive> two{at(Vec3(0, 0, 0)), at(Vec3(1, 0, 0))};
  std::vector<MotionParams> p2(2);
  p2[1].twists.base.nu = Vec3(1, 0, 0);
  const auto g2 = knn_canonical(two, 1);
  CHECK(rigid_coherence_loss(two, p2, g2, 50.0) == doctest::Approx(2.0));

  const std::vector<Primitive> far{at(Vec3(0, 0, 0), Vec3(0, 0, 0)),
                                   at(Vec3(1, 0, 0), Vec3(1, 0, 0))};
  const double suppressed = rigid_coherence_loss(far, p2, g2, 50.0);
  CHECK(suppressed > 0.0);
  CHECK(suppressed < 1e-20 * 2.0);
}

TEST_CASE("rigid coherence is permutation invariant") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto cloud = random_cloud(rng, 30);
    std::vector<MotionParams> params;
    for (std::size_t i = 0; i < cloud.size(); ++i) params.push_back(random_params(rng));
    const double before = rigid_coherence_loss(cloud, params, knn_canonical(cloud, 3), 50.0);

    std::vector<std::size_t> perm(cloud.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Primitive> pc;
    std::vector<MotionParams> pp;
    for (std::size_t i : perm) {
      pc.push_back(cloud[i]);
      pp.push_back(params[i]);
    }
    const double after = rigid_coherence_loss(pc, pp, knn_canonical(pc, 3), 50.0);
    CHECK(std::abs(before - after) <= 1e-12 * std::max(1.0, before));
  }
}

TEST_CASE("rigid coherence decreases as an outlier joins its neighbours") {
  std::mt19937_64 rng(6);
  auto cloud = random_cloud(rng, 15, 0.01);
  const Twist shared = random_twist(rng);
  std::vector<MotionParams> params(cloud.size());
  for (auto& p : params) p.twists.base = shared;
  const Twist outlier = random_twist(rng);
  const auto g = knn_canonical(cloud, 3);
  double prev = INFINITY;
  for (int step = 0; step <= 10; ++step) {
    const double s = step / 10.0;
    params[4].twists.base = (1.0 - s) * outlier + s * shared;
    const double loss = rigid_coherence_loss(cloud, params, g, 50.0);
    CHECK(loss < prev + (step == 10 ? 1e-15 : 0.0));
    prev = loss;
  }
  CHECK(prev == doctest::Approx(0.0));
}

TEST_CASE("rigid coherence gradient matches central differences") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cloud = random_cloud(rng, 12, 0.05);
    std::vector<MotionParams> params;
    for (std::size_t i = 0; i < cloud.size(); ++i) params.push_back(random_params(rng));
    const auto g = knn_canonical(cloud, 3);
    std::vector<MotionVector> grad(cloud.size(), MotionVector::Zero());
    accumulate_rigid_coherence_gradient(cloud, params, g, 50.0, grad, 1.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const std::function<double(const MotionVector&)> f = [&](const MotionVector& v) {
        auto copy = params;
        copy[i] = MotionParams::from_vector(v);
        return rigid_coherence_loss(cloud, copy, g, 50.0);
      };
      const Eigen::VectorXd fd = oracle::central_gradient(f, params[i].to_vector());
      CHECK(oracle::relative_error(grad[i], fd, 1e-8) < 1e-6);
    }
  }
}

TEST_CASE("losses are non-negative") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cloud = random_cloud(rng, 8, 0.5);
    std::vector<MotionParams> params;
    for (std::size_t i = 0; i < cloud.size(); ++i) params.push_back(random_params(rng));
    CHECK(rigid_coherence_loss(cloud, params, knn_canonical(cloud, 3), 50.0) >= 0.0);
    CHECK(motion_smoothness_loss(params) >= 0.0);
    CHECK(opacity_regularizer(cloud) >= 0.0);
  }
}

TEST_CASE("size mismatches are rejected") {
  std::mt19937_64 rng(9);
  const auto cloud = random_cloud(rng, 5);
  const auto g = knn_canonical(cloud, 2);
  std::vector<MotionParams> params(4);
  CHECK_THROWS_AS(rigid_coherence_loss(cloud, params, g, 50.0), std::invalid_argument);
}

TEST_CASE("opacity regularizer") {
  std::vector<Primitive> prims(4);
  for (auto& p : prims) p.profile.alpha = sigmoid(-40.0);
  CHECK(opacity_regularizer(prims) < 1e-15);
  for (auto& p : prims) p.profile.alpha = sigmoid(0.0);
  CHECK(opacity_regularizer(prims) == 0.5);
  std::vector<Primitive> mixed(2);
  mixed[0].profile.alpha = 0.2;
  mixed[1].profile.alpha = 0.8;
  CHECK(opacity_regularizer(mixed) == doctest::Approx(0.5));
  CHECK_THROWS_AS(opacity_regularizer(std::vector<Primitive>{}), std::invalid_argument);

  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("total objective") {
  LossWeights zero{0.0, 0.0, 0.0, 50.0, 3};
  CHECK(total_objective(1.25, 7.0, 8.0, 9.0, zero) == 1.25);
  CHECK(total_objective(0.0, 1.0, 1.0, 1.0, LossWeights{}) == doctest::Approx(1.0101).epsilon(1e-14));
  const LossWeights w;
  const double base = total_objective(0.3, 0.4, 0.5, 0.6, w);
  CHECK(total_objective(0.3, 1.4, 0.5, 0.6, w) - base == doctest::Approx(w.w_reg));
  CHECK(total_objective(0.3, 0.4, 1.5, 0.6, w) - base == doctest::Approx(w.w_motion));
  CHECK(total_objective(0.3, 0.4, 0.5, 1.6, w) - base == doctest::Approx(w.w_rigid));
  CHECK(total_objective(1.3, 0.4, 0.5, 0.6, w) - base == doctest::Approx(1.0));
}
