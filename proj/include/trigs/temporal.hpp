#pragma once

#include <utility>

#include "trigs/se3.hpp"

namespace trigs {

/// Temporal placement of a primitive: central time, temporal scale (> 0)
/// and canonical opacity in (0, 1].
struct TemporalProfile {
  double mu_t = 0.0;
  double s_t = 1.0;
  double alpha = 1.0;

  bool valid() const;
};

/// Base twist plus the three control twists of the quadratic residual curve.
struct BezierTwists {
  Twist base;
  Twist ctrl0;
  Twist ctrl1;
  Twist ctrl2;
};

/// Quadratic Bernstein weights ((1-tau)^2, 2(1-tau)tau, tau^2).
struct BernsteinWeights {
  double w0;
  double w1;
  double w2;
};

BernsteinWeights bernstein2(double tau);

/// Visibility factor exp(-(t - mu_t)^2 / (2 s_t^2)), without alpha.
double temporal_visibility(const TemporalProfile& profile, double t);

/// alpha * visibility.
double temporal_opacity(const TemporalProfile& profile, double t);

/// [mu_t - 2 s_t, mu_t + 2 s_t].
std::pair<double, double> effective_window(const TemporalProfile& profile);

/// Position of t inside the effective window, clamped to [0, 1].
double normalized_time(const TemporalProfile& profile, double t);

/// Quadratic Bezier over the control twists. Throws std::domain_error when
/// tau lies outside [0, 1]; callers clamp through normalized_time.
Twist bezier_residual(const BezierTwists& b, double tau);

/// zeta(t) = base + residual(normalized_time(t)).
Twist motion_coefficient(const BezierTwists& b, const TemporalProfile& profile, double t);

/// Translation-only baseline mu + v (t - mu_t).
Vec3 linear_position(const Vec3& mu, const Vec3& v, double mu_t, double t);

}  // namespace trigs
