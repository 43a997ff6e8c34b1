#include "trigs/temporal.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trigs {

bool TemporalProfile::valid() const {
  return std::isfinite(mu_t) && std::isfinite(s_t) && s_t > 0.0 && alpha > 0.0 && alpha <= 1.0;
}

BernsteinWeights bernstein2(double tau) {
  const double r = 1.0 - tau;
  return {r * r, 2.0 * r * tau, tau * tau};
}

double temporal_visibility(const TemporalProfile& profile, double t) {
  const double d = t - profile.mu_t;
  return std::exp(-(d * d) / (2.0 * profile.s_t * profile.s_t));
}

double temporal_opacity(const TemporalProfile& profile, double t) {
  return profile.alpha * temporal_visibility(profile, t);
}

std::pair<double, double> effective_window(const TemporalProfile& profile) {
  return {profile.mu_t - 2.0 * profile.s_t, profile.mu_t + 2.0 * profile.s_t};
}

double normalized_time(const TemporalProfile& profile, double t) {
  const double t_norm = (t - (profile.mu_t - 2.0 * profile.s_t)) / (4.0 * profile.s_t);
  if (t_norm < 0.0) return 0.0;
  if (t_norm > 1.0) return 1.0;
  return t_norm;
}

Twist bezier_residual(const BezierTwists& b, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::domain_error("bezier_residual: tau=" + std::to_string(tau) + " outside [0, 1]");
  }
  const auto w = bernstein2(tau);
  return w.w0 * b.ctrl0 + w.w1 * b.ctrl1 + w.w2 * b.ctrl2;
}

Twist motion_coefficient(const BezierTwists& b, const TemporalProfile& profile, double t) {
  return b.base + bezier_residual(b, normalized_time(profile, t));
}

Vec3 linear_position(const Vec3& mu, const Vec3& v, double mu_t, double t) {
  return mu + v * (t - mu_t);
}

}  // namespace trigs
