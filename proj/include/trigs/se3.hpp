#pragma once

// Closed-form SO(3)/SE(3) exponential maps with small-angle stabilized
// coefficients.
//
// Conventions used throughout the library:
//   * Mat3 is row-major; m(r, c) addresses row r, column c.
//   * Vectors are columns and transforms act on the left: y = R * x + p.
//   * A twist / log-parameter is ordered (angular, translational).

#include <array>

#include <Eigen/Core>

namespace trigs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Angular-magnitude threshold shared by the small-angle branch of C(theta)
// and the axis projections of the anchor deformation.
inline constexpr double kSmallAngleEps = 1e-8;
// Denominator clamp for the projection quotients.
inline constexpr double kDenominatorClamp = 1e-10;

/// Element of se(3): angular velocity omega and translational velocity nu.
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 nu = Vec3::Zero();

  static Twist zero() { return {}; }
  static Twist from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
  Vec6 as_vector() const {
    Vec6 v;
    v << omega, nu;
    return v;
  }
  double squared_norm() const { return omega.squaredNorm() + nu.squaredNorm(); }

  Twist& operator+=(const Twist& o) {
    omega += o.omega;
    nu += o.nu;
    return *this;
  }
  friend Twist operator+(Twist a, const Twist& b) { return a += b; }
  friend Twist operator-(const Twist& a, const Twist& b) {
    return {a.omega - b.omega, a.nu - b.nu};
  }
  friend Twist operator*(double s, const Twist& a) { return {s * a.omega, s * a.nu}; }
};

/// Relative log-parameter u = zeta * dt, split as (phi, upsilon).
struct LogParam {
  Vec3 phi = Vec3::Zero();
  Vec3 upsilon = Vec3::Zero();

  static LogParam from_twist(const Twist& z, double dt) { return {z.omega * dt, z.nu * dt}; }
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Eigen::Matrix4d as_matrix() const;
};

/// A = sin(t)/t, B = (1 - cos t)/t^2, C = (t - sin t)/t^3.
struct StabilizedCoeffs {
  double a = 1.0;
  double b = 0.5;
  double c = 1.0 / 6.0;
};

/// Normalized sinc, sin(pi x) / (pi x), with sinc(0) = 1.
double sinc(double x);

Mat3 hat(const Vec3& v);

/// Rodrigues/left-Jacobian coefficients at angle `theta` (>= 0).
/// A and B go through sinc for every theta; C switches to its Taylor
/// expansion below theta^2 = kSmallAngleEps.
StabilizedCoeffs stabilized_coeffs(double theta);

Mat3 so3_exp(const Vec3& phi);
Mat3 left_jacobian(const Vec3& phi);
RigidTransform se3_exp(const LogParam& u);

/// Partial derivatives of se3_exp.
///   rotation_dphi[k] = dR / dphi_k
///   translation_dphi(:, k) = dp / dphi_k
///   translation_dupsilon = dp / dupsilon (= J(phi))
struct Se3Derivatives {
  std::array<Mat3, 3> rotation_dphi;
  Mat3 translation_dphi;
  Mat3 translation_dupsilon;
};

struct Se3ExpWithGrads {
  RigidTransform transform;
  Se3Derivatives grads;
};

Se3ExpWithGrads se3_exp_with_grads(const LogParam& u);

/// d(J(phi) v) / dphi for a fixed vector v.
Mat3 left_jacobian_times_vector_dphi(const Vec3& phi, const Vec3& v);

}  // namespace trigs
