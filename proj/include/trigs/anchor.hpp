#pragma once

// Gauge-fixed local-anchor deformation of Gaussian primitives.

#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "trigs/se3.hpp"
#include "trigs/temporal.hpp"

namespace trigs {

/// Canonical Gaussian. Covariance is kept factored as orientation and
/// per-axis standard deviation so it stays positive definite.
struct Primitive {
  Vec3 mu = Vec3::Zero();
  Vec3 scale = Vec3::Constant(0.01);
  Eigen::Quaterniond orient = Eigen::Quaterniond::Identity();
  TemporalProfile profile;  // central time, temporal scale, opacity
  Vec3 color = Vec3::Constant(0.5);

  double alpha() const { return profile.alpha; }
  Mat3 covariance() const;
  bool valid() const;
};

/// Number of learnable motion scalars: base, ctrl0, ctrl1, ctrl2 twists
/// (6 each) followed by the anchor (3).
inline constexpr int kMotionDof = 27;
using MotionVector = Eigen::Matrix<double, kMotionDof, 1>;
using MeanJacobian = Eigen::Matrix<double, 3, kMotionDof>;

struct MotionParams {
  BezierTwists twists;
  Vec3 anchor = Vec3::Zero();

  MotionVector to_vector() const;
  static MotionParams from_vector(const MotionVector& v);
};

struct DeformedState {
  Vec3 mean;
  Mat3 rotation;    // R(t)
  Mat3 covariance;  // R(t) Sigma R(t)^T
  double opacity;   // alpha * gamma(t)
};

/// kFixed projects the anchor off the instantaneous rotation axis and keeps
/// only the axis-aligned translation. kDisabled uses the raw anchor and the
/// full translation (ablation only).
enum class GaugeMode { kFixed, kDisabled };

struct AxisProjections {
  Vec3 anchor_perp;
  Vec3 nu_par;
};

/// Anchor projected onto the plane orthogonal to omega, and nu projected
/// onto omega. Below ||omega||^2 = kSmallAngleEps both pass through.
AxisProjections axis_projections(const Vec3& anchor, const Vec3& omega, const Vec3& nu);

DeformedState deform(const Primitive& prim, const MotionParams& params, double t,
                     GaugeMode gauge = GaugeMode::kFixed);

struct DeformWithGrads {
  DeformedState state;
  MeanJacobian mean_jacobian;  // d mean / d MotionParams::to_vector()
};

DeformWithGrads deform_with_grads(const Primitive& prim, const MotionParams& params, double t,
                                  GaugeMode gauge = GaugeMode::kFixed);

/// Deforms every primitive at time t using up to `threads` workers. Each
/// entry is computed independently, so results match a sequential loop.
std::vector<DeformedState> deform_batch(std::span<const Primitive> prims,
                                        std::span<const MotionParams> params, double t,
                                        unsigned threads = 1);

}  // namespace trigs
