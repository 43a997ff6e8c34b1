#include "trigs/se3.hpp"

#include <cmath>
#include <numbers>

namespace trigs {

namespace {

// Below this angle (t - sin t), (A - 2B) and (B - 3C) lose too many digits to
// cancellation; their even power series are used instead.
constexpr double kSeriesAngle = 0.5;
constexpr int kSeriesTerms = 12;

// sum_k (-1)^k t^(2k) / (2k+3)!
double c_series(double theta2) {
  double term = 1.0 / 6.0;
  double sum = term;
  for (int k = 1; k < kSeriesTerms; ++k) {
    term *= -theta2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    sum += term;
  }
  return sum;
}

// B'(t)/t = sum_{k>=1} (-1)^k 2k t^(2k-2) / (2k+2)!
double db_over_theta_series(double theta2) {
  double power_over_fact = 1.0 / 24.0;  // t^0 / 4!
  double sum = 0.0;
  for (int k = 1; k < kSeriesTerms; ++k) {
    sum += ((k % 2) ? -1.0 : 1.0) * 2.0 * k * power_over_fact;
    power_over_fact *= theta2 / ((2.0 * k + 3.0) * (2.0 * k + 4.0));
  }
  return sum;
}

// C'(t)/t = sum_{k>=1} (-1)^k 2k t^(2k-2) / (2k+3)!
double dc_over_theta_series(double theta2) {
  double power_over_fact = 1.0 / 120.0;  // t^0 / 5!
  double sum = 0.0;
  for (int k = 1; k < kSeriesTerms; ++k) {
    sum += ((k % 2) ? -1.0 : 1.0) * 2.0 * k * power_over_fact;
    power_over_fact *= theta2 / ((2.0 * k + 4.0) * (2.0 * k + 5.0));
  }
  return sum;
}

struct CoeffDerivatives {
  double db_over_theta;
  double dc_over_theta;
};

CoeffDerivatives coeff_derivatives(double theta, const StabilizedCoeffs& k) {
  const double theta2 = theta * theta;
  if (theta2 < kSmallAngleEps) {
    // Derivative of the Taylor branch 1/6 - t^2/120 is exactly -t/60.
    return {db_over_theta_series(theta2), -1.0 / 60.0};
  }
  if (theta < kSeriesAngle) {
    return {db_over_theta_series(theta2), dc_over_theta_series(theta2)};
  }
  return {(k.a - 2.0 * k.b) / theta2, (k.b - 3.0 * k.c) / theta2};
}

}  // namespace

Eigen::Matrix4d RigidTransform::as_matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double sinc(double x) {
  const double y = std::numbers::pi * x;
  if (std::abs(y) < 1e-4) {
    const double y2 = y * y;
    return 1.0 - y2 / 6.0 + y2 * y2 / 120.0;
  }
  return std::sin(y) / y;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

StabilizedCoeffs stabilized_coeffs(double theta) {
  StabilizedCoeffs k;
  k.a = sinc(theta / std::numbers::pi);
  const double half = sinc(theta / (2.0 * std::numbers::pi));
  k.b = 0.5 * half * half;

  const double theta2 = theta * theta;
  if (theta2 < kSmallAngleEps) {
    k.c = 1.0 / 6.0 - theta2 / 120.0;
  } else if (theta < kSeriesAngle) {
    k.c = c_series(theta2);
  } else {
    k.c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return k;
}

Mat3 so3_exp(const Vec3& phi) {
  const auto k = stabilized_coeffs(phi.norm());
  const Mat3 w = hat(phi);
  return Mat3::Identity() + k.a * w + k.b * w * w;
}

Mat3 left_jacobian(const Vec3& phi) {
  const auto k = stabilized_coeffs(phi.norm());
  const Mat3 w = hat(phi);
  return Mat3::Identity() + k.b * w + k.c * w * w;
}

RigidTransform se3_exp(const LogParam& u) {
  const auto k = stabilized_coeffs(u.phi.norm());
  const Mat3 w = hat(u.phi);
  const Mat3 w2 = w * w;
  RigidTransform out;
  out.rotation = Mat3::Identity() + k.a * w + k.b * w2;
  out.translation = (Mat3::Identity() + k.b * w + k.c * w2) * u.upsilon;
  return out;
}

Mat3 left_jacobian_times_vector_dphi(const Vec3& phi, const Vec3& v) {
  const double theta = phi.norm();
  const auto k = stabilized_coeffs(theta);
  const auto dk = coeff_derivatives(theta, k);
  const Mat3 w = hat(phi);
  const Vec3 wv = w * v;
  const Vec3 w2v = w * wv;
  // d/dphi [B(t) W v + C(t) W^2 v], using dt/dphi = phi^T / t and
  // hat(e_k) x = -hat(x) e_k.
  return dk.db_over_theta * wv * phi.transpose() - k.b * hat(v) +
         dk.dc_over_theta * w2v * phi.transpose() - k.c * (hat(wv) + w * hat(v));
}

Se3ExpWithGrads se3_exp_with_grads(const LogParam& u) {
  Se3ExpWithGrads out;
  out.transform = se3_exp(u);
  const Mat3 jac = left_jacobian(u.phi);
  // Left-trivialized derivative: dR/dphi_k = hat(J e_k) R.
  for (int i = 0; i < 3; ++i) {
    out.grads.rotation_dphi[i] = hat(jac.col(i)) * out.transform.rotation;
  }
  out.grads.translation_dphi = left_jacobian_times_vector_dphi(u.phi, u.upsilon);
  out.grads.translation_dupsilon = jac;
  return out;
}

}  // namespace trigs
