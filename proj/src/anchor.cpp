#include "trigs/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace trigs {

Mat3 Primitive::covariance() const {
  const Mat3 r = orient.toRotationMatrix();
  return r * scale.cwiseProduct(scale).asDiagonal() * r.transpose();
}

bool Primitive::valid() const {
  return mu.allFinite() && scale.allFinite() && (scale.array() > 0.0).all() &&
         std::abs(orient.norm() - 1.0) <= 1e-9 && profile.valid() && color.allFinite();
}

MotionVector MotionParams::to_vector() const {
  MotionVector v;
  v << twists.base.as_vector(), twists.ctrl0.as_vector(), twists.ctrl1.as_vector(),
      twists.ctrl2.as_vector(), anchor;
  return v;
}

MotionParams MotionParams::from_vector(const MotionVector& v) {
  MotionParams p;
  p.twists.base = Twist::from_vector(v.segment<6>(0));
  p.twists.ctrl0 = Twist::from_vector(v.segment<6>(6));
  p.twists.ctrl1 = Twist::from_vector(v.segment<6>(12));
  p.twists.ctrl2 = Twist::from_vector(v.segment<6>(18));
  p.anchor = v.segment<3>(24);
  return p;
}

AxisProjections axis_projections(const Vec3& anchor, const Vec3& omega, const Vec3& nu) {
  const double s = omega.squaredNorm();
  if (s <= kSmallAngleEps) return {anchor, nu};
  const double denom = std::max(s, kDenominatorClamp);
  return {anchor - (anchor.dot(omega) / denom) * omega, (nu.dot(omega) / denom) * omega};
}

namespace {

struct Evaluation {
  DeformedState state;
  MeanJacobian jac;
};

template <bool kWithGrads>
Evaluation evaluate(const Primitive& prim, const MotionParams& params, double t, GaugeMode gauge) {
  const double tau = normalized_time(prim.profile, t);
  const auto bw = bernstein2(tau);
  const auto& tw = params.twists;
  const Twist zeta = tw.base + (bw.w0 * tw.ctrl0 + bw.w1 * tw.ctrl1 + bw.w2 * tw.ctrl2);
  const double dt = t - prim.profile.mu_t;
  const Vec3& omega = zeta.omega;
  const Vec3& nu = zeta.nu;
  const Vec3& a = params.anchor;

  const double s = omega.squaredNorm();
  const bool projected = gauge == GaugeMode::kFixed && s > kSmallAngleEps;
  AxisProjections proj{a, nu};
  if (projected) proj = axis_projections(a, omega, nu);

  const Vec3 phi = omega * dt;
  const Vec3 upsilon = proj.nu_par * dt;
  const Mat3 rot = so3_exp(phi);
  const Mat3 jl = left_jacobian(phi);
  const Vec3 lever = prim.mu - proj.anchor_perp;

  Evaluation out;
  // mu + (R - I)(mu - a_perp) + J upsilon is exact when R = I.
  out.state.mean = prim.mu + (rot - Mat3::Identity()) * lever + jl * upsilon;
  out.state.rotation = rot;
  out.state.covariance = rot * prim.covariance() * rot.transpose();
  out.state.opacity = temporal_opacity(prim.profile, t);

  if constexpr (kWithGrads) {
    Mat3 da_domega = Mat3::Zero();
    Mat3 dnu_domega = Mat3::Zero();
    Mat3 dnu_dnu = Mat3::Identity();
    Mat3 da_da = Mat3::Identity();
    if (projected) {
      const double denom = std::max(s, kDenominatorClamp);
      const double aw = a.dot(omega);
      const double vw = nu.dot(omega);
      const Mat3 outer = omega * omega.transpose();
      da_domega = -(omega * a.transpose() + aw * Mat3::Identity()) / denom +
                  (2.0 * aw / (denom * denom)) * outer;
      dnu_domega = (omega * nu.transpose() + vw * Mat3::Identity()) / denom -
                   (2.0 * vw / (denom * denom)) * outer;
      dnu_dnu = outer / denom;
      da_da = Mat3::Identity() - outer / denom;
    }
    const Mat3 i_minus_r = Mat3::Identity() - rot;
    const Mat3 dmean_dphi = -hat(rot * lever) * jl + left_jacobian_times_vector_dphi(phi, upsilon);
    const Mat3 dmean_domega = dt * dmean_dphi + i_minus_r * da_domega + dt * jl * dnu_domega;
    const Mat3 dmean_dnu = dt * jl * dnu_dnu;

    Eigen::Matrix<double, 3, 6> dmean_dzeta;
    dmean_dzeta << dmean_domega, dmean_dnu;
    out.jac.block<3, 6>(0, 0) = dmean_dzeta;
    out.jac.block<3, 6>(0, 6) = bw.w0 * dmean_dzeta;
    out.jac.block<3, 6>(0, 12) = bw.w1 * dmean_dzeta;
    out.jac.block<3, 6>(0, 18) = bw.w2 * dmean_dzeta;
    out.jac.block<3, 3>(0, 24) = i_minus_r * da_da;
  }
  return out;
}

}  // namespace

DeformedState deform(const Primitive& prim, const MotionParams& params, double t,
                     GaugeMode gauge) {
  return evaluate<false>(prim, params, t, gauge).state;
}

DeformWithGrads deform_with_grads(const Primitive& prim, const MotionParams& params, double t,
                                  GaugeMode gauge) {
  auto e = evaluate<true>(prim, params, t, gauge);
  return {e.state, e.jac};
}

std::vector<DeformedState> deform_batch(std::span<const Primitive> prims,
                                        std::span<const MotionParams> params, double t,
                                        unsigned threads) {
  if (prims.size() != params.size()) {
    throw std::invalid_argument("deform_batch: primitive/param count mismatch");
  }
  std::vector<DeformedState> out(prims.size());
  const std::size_t n = prims.size();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = deform(prims[i], params[i], t);
  };
  if (workers == 1) {
    run(0, n);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      pool.emplace_back(run, begin, std::min(n, begin + chunk));
    }
  }  // joined here
  return out;
}

}  // namespace trigs
