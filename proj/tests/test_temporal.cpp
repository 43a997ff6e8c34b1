#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "trigs/temporal.hpp"

using namespace trigs;

namespace {

Twist twist(double a, double b, double c, double d, double e, double f) {
  return {Vec3(a, b, c), Vec3(d, e, f)};
}

bool near(const Twist& x, const Twist& y, double tol) {
  return (x.as_vector() - y.as_vector()).norm() <= tol;
}

}  // namespace

TEST_CASE("profile validity") {
  CHECK(TemporalProfile{0.0, 1.0, 1.0}.valid());
  CHECK_FALSE(TemporalProfile{0.0, 0.0, 1.0}.valid());
  CHECK_FALSE(TemporalProfile{0.0, 1.0, 0.0}.valid());
  CHECK_FALSE(TemporalProfile{0.0, 1.0, 1.5}.valid());
  CHECK_FALSE(TemporalProfile{NAN, 1.0, 0.5}.valid());
}

TEST_CASE("temporal opacity examples") {
  const TemporalProfile p{0.3, 0.1, 0.7};
  CHECK(temporal_opacity(p, 0.3) == 0.7);
  CHECK(temporal_opacity({0.3, 0.1, 1.0}, 0.4) == doctest::Approx(std::exp(-0.5)));
  CHECK(temporal_opacity({0.0, 0.5, 0.8}, 1.0) == doctest::Approx(0.8 * std::exp(-2.0)));
  CHECK(temporal_visibility(p, 0.3) == 1.0);
}

TEST_CASE("temporal opacity is symmetric and bounded") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    const TemporalProfile p{u(rng), 0.05 + std::abs(u(rng)), 0.01 + 0.99 * std::abs(u(rng)) / 3};
    const double d = u(rng);
    CHECK(std::abs(temporal_opacity(p, p.mu_t + d) - temporal_opacity(p, p.mu_t - d)) < 1e-14);
    const double v = temporal_opacity(p, p.mu_t + 0.1 * d);
    CHECK(v > 0.0);
    CHECK(v <= p.alpha);
  }
}

TEST_CASE("effective window") {
  auto w = effective_window({0.0, 1.0, 1.0});
  CHECK(w.first == -2.0);
  CHECK(w.second == 2.0);
  w = effective_window({5.0, 0.25, 1.0});
  CHECK(w.first == 4.5);
  CHECK(w.second == 5.5);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int i = 0; i < 100; ++i) {
    const TemporalProfile p{u(rng) - 1.0, u(rng), 1.0};
    const auto [lo, hi] = effective_window(p);
    CHECK(0.5 * (lo + hi) == doctest::Approx(p.mu_t));
    CHECK(hi - lo == doctest::Approx(4.0 * p.s_t));
  }
}

TEST_CASE("normalized time examples and clamping") {
  const TemporalProfile p{0.4, 0.1, 1.0};
  CHECK(normalized_time(p, 0.4) == doctest::Approx(0.5));
  CHECK(normalized_time(p, 0.4 - 10 * 0.1) == 0.0);
  CHECK(normalized_time(p, 0.4 + 2 * 0.1) == doctest::Approx(1.0));
  CHECK(normalized_time(p, 50.0) == 1.0);
  CHECK(normalized_time(p, -50.0) == 0.0);
}

TEST_CASE("normalized time is monotone") {
  const TemporalProfile p{0.2, 0.3, 1.0};
  double prev = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double t = -2.0 + 4.0 * i / 2000.0;
    const double tau = normalized_time(p, t);
    CHECK(tau >= prev);
    CHECK(tau >= 0.0);
    CHECK(tau <= 1.0);
    prev = tau;
  }
}

TEST_CASE("bernstein weights partition unity") {
  for (double tau : {0.0, 0.1, 0.5, 0.77, 1.0}) {
    const auto w = bernstein2(tau);
    CHECK(w.w0 + w.w1 + w.w2 == doctest::Approx(1.0));
  }
}

TEST_CASE("bezier residual examples") {
  BezierTwists b;
  b.ctrl0 = twist(1, 2, 3, 4, 5, 6);
  b.ctrl1 = twist(-1, 0, 2, 1, 1, 1);
  b.ctrl2 = twist(0.5, 0.5, 0.5, -2, 0, 3);
  CHECK(near(bezier_residual(b, 0.0), b.ctrl0, 0.0));
  CHECK(near(bezier_residual(b, 1.0), b.ctrl2, 0.0));
  CHECK(near(bezier_residual(b, 0.5), 0.25 * (b.ctrl0 + 2.0 * b.ctrl1 + b.ctrl2), 1e-15));

  CHECK_THROWS_AS(bezier_residual(b, -1e-9), std::domain_error);
  CHECK_THROWS_AS(bezier_residual(b, 1.0 + 1e-9), std::domain_error);
  CHECK_THROWS_AS(bezier_residual(b, NAN), std::domain_error);
}

TEST_CASE("bezier residual scales with the control twists") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    BezierTwists b;
    for (Twist* t : {&b.ctrl0, &b.ctrl1, &b.ctrl2}) *t = twist(u(rng), u(rng), u(rng), u(rng), u(rng), u(rng));
    const double s = 3.0 * u(rng);
    BezierTwists scaled = b;
    scaled.ctrl0 = s * b.ctrl0;
    scaled.ctrl1 = s * b.ctrl1;
    scaled.ctrl2 = s * b.ctrl2;
    const double tau = 0.5 * (u(rng) + 1.0);
    CHECK(near(bezier_residual(scaled, tau), s * bezier_residual(b, tau), 1e-12));
  }
}

TEST_CASE("motion coefficient examples") {
  const TemporalProfile p{0.5, 0.1, 1.0};
  BezierTwists b;
  b.base = twist(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
  for (double t : {-1.0, 0.3, 0.5, 0.61, 3.0}) CHECK(near(motion_coefficient(b, p, t), b.base, 0.0));

  b.ctrl0 = twist(1, 0, 0, 0, 0, 0);
  b.ctrl1 = twist(0, 1, 0, 0, 0, 0);
  b.ctrl2 = twist(0, 0, 1, 0, 0, 1);
  CHECK(near(motion_coefficient(b, p, 100.0), b.base + b.ctrl2, 1e-15));
  CHECK(near(motion_coefficient(b, p, -100.0), b.base + b.ctrl0, 1e-15));

  BezierTwists c;
  const Twist w = twist(0.3, -0.2, 0.1, 1, 2, 3);
  c.ctrl0 = c.ctrl1 = c.ctrl2 = w;
  for (double t : {-1.0, 0.35, 0.5, 0.66, 2.0}) CHECK(near(motion_coefficient(c, p, t), w, 1e-15));
}

TEST_CASE("motion coefficient is continuous across the window edges") {
  const TemporalProfile p{0.5, 0.1, 1.0};
  BezierTwists b;
  b.base = twist(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
  b.ctrl0 = twist(1, -1, 2, 0, 3, 1);
  b.ctrl1 = twist(0, 1, 0, 2, 0, -1);
  b.ctrl2 = twist(-2, 0, 1, 1, 0, 4);
  const auto [lo, hi] = effective_window(p);
  const double h = 1e-9;
  for (double edge : {lo, hi}) {
    const auto diff = motion_coefficient(b, p, edge - h) - motion_coefficient(b, p, edge + h);
    CHECK(std::sqrt(diff.squared_norm()) < 1e-7);
  }
}

TEST_CASE("linear baseline") {
  const Vec3 mu(1, -2, 0.5);
  CHECK(linear_position(mu, Vec3(3, 4, 5), 0.7, 0.7) == mu);
  CHECK(linear_position(Vec3::Zero(), Vec3(1, 0, 0), 0.0, 2.0) == Vec3(2, 0, 0));
  for (double t : {-3.0, 0.0, 10.0}) CHECK(linear_position(mu, Vec3::Zero(), 0.2, t) == mu);
}
