#include "trigs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace trigs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-6) return v / len;
  }
}

Eigen::Quaterniond random_orientation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

Vec3 body_color(int body, int n_bodies) {
  // Evenly spaced hues, saturation 0.8, value 0.9.
  const double h = 6.0 * static_cast<double>(body) / static_cast<double>(std::max(n_bodies, 1));
  const double v = 0.9;
  const double c = v * 0.8;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  Vec3 rgb;
  switch (static_cast<int>(h) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return rgb.array() + m;
}

MotionParams ground_truth_params(MotionKind kind, const Vec3& center, const SceneConfig& cfg,
                                 std::mt19937_64& rng) {
  MotionParams p;
  p.anchor = center;
  if (kind == MotionKind::kStatic) return p;
  std::uniform_real_distribution<double> omega_mag(cfg.omega_min, cfg.omega_max);
  std::uniform_real_distribution<double> nu_mag(cfg.nu_min, cfg.nu_max);
  const Vec3 axis = random_unit(rng);
  p.twists.base.omega = omega_mag(rng) * axis;
  // Axial translation keeps the truth in the gauge-fixed form.
  p.twists.base.nu = nu_mag(rng) * axis;
  if (kind == MotionKind::kBezierTwist) {
    for (Twist* ctrl : {&p.twists.ctrl0, &p.twists.ctrl1, &p.twists.ctrl2}) {
      ctrl->omega = 0.5 * omega_mag(rng) * random_unit(rng);
      ctrl->nu = 0.5 * nu_mag(rng) * random_unit(rng);
    }
  }
  return p;
}

double max_pairwise_distance(const std::vector<Vec3>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).norm());
  }
  return best;
}

MeanJacobian model_jacobian(const Primitive& prim, const MotionParams& params, double t,
                            MotionModel model, Vec3& position) {
  if (model == MotionModel::kLinear) {
    const double dt = t - prim.profile.mu_t;
    position = linear_position(prim.mu, params.twists.base.nu, prim.profile.mu_t, t);
    MeanJacobian j = MeanJacobian::Zero();
    j.block<3, 3>(0, 3) = dt * Mat3::Identity();
    return j;
  }
  const auto gauge = model == MotionModel::kFull ? GaugeMode::kFixed : GaugeMode::kDisabled;
  auto r = deform_with_grads(prim, params, t, gauge);
  position = r.state.mean;
  return r.mean_jacobian;
}

void check_shapes(std::size_t prims, std::size_t params, const TrajectoryData& data) {
  if (prims != params || data.targets.size() != prims * data.n_times() ||
      data.weights.size() != data.targets.size()) {
    throw std::invalid_argument("trajectory loss: shape mismatch");
  }
}

NeighborGraph build_graph(const FitState& state, const LossWeights& w) {
  if (state.size() < 2) {
    NeighborGraph g;
    g.neighbors.resize(state.size());
    return g;
  }
  return knn_canonical(state.prims, w.k_neighbors);
}

}  // namespace

const char* to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::kStatic: return "static";
    case MotionKind::kConstantTwist: return "constant-twist";
    case MotionKind::kBezierTwist: return "bezier-twist";
  }
  return "?";
}

MotionKind motion_kind_from_string(const std::string& s) {
  if (s == "static") return MotionKind::kStatic;
  if (s == "constant-twist") return MotionKind::kConstantTwist;
  if (s == "bezier-twist") return MotionKind::kBezierTwist;
  throw InvalidInput("unknown motion kind '" + s + "'");
}

const char* to_string(MotionModel model) {
  switch (model) {
    case MotionModel::kFull: return "full";
    case MotionModel::kNoGaugeFix: return "no-gauge-fix";
    case MotionModel::kLinear: return "linear";
  }
  return "?";
}

MotionModel motion_model_from_string(const std::string& s) {
  if (s == "full") return MotionModel::kFull;
  if (s == "no-gauge-fix") return MotionModel::kNoGaugeFix;
  if (s == "linear") return MotionModel::kLinear;
  throw InvalidInput("unknown motion model '" + s + "'");
}

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "gd";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "gd") return OptimizerKind::kGradientDescent;
  throw InvalidInput("unknown optimizer '" + s + "'");
}

MotionKind SceneConfig::kind_of(int b) const {
  return motion_kinds.size() == 1 ? motion_kinds.front() : motion_kinds.at(static_cast<std::size_t>(b));
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidInput("scene config: " + what); };
  if (n_bodies < 1) fail("n_bodies must be >= 1");
  if (primitives_per_body < 1) fail("primitives_per_body must be >= 1");
  if (n_timesteps < 2) fail("n_timesteps must be >= 2");
  if (motion_kinds.empty()) fail("motion_kind is required");
  if (motion_kinds.size() != 1 && motion_kinds.size() != static_cast<std::size_t>(n_bodies)) {
    fail("motion_kind needs one entry or one per body");
  }
  if (!(omega_min >= 0.0 && omega_min <= omega_max)) fail("need 0 <= omega_min <= omega_max");
  if (!(nu_min >= 0.0 && nu_min <= nu_max)) fail("need 0 <= nu_min <= nu_max");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(body_size > 0.0)) fail("body_size must be > 0");
  if (!std::isfinite(body_spacing)) fail("body_spacing must be finite");
  if (!(temporal_scale > 0.0)) fail("temporal_scale must be > 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0, 1]");
  if (!(dead_fraction >= 0.0 && dead_fraction <= 1.0)) fail("dead_fraction must be in [0, 1]");
  if (!(dead_alpha > 0.0 && dead_alpha <= 1.0)) fail("dead_alpha must be in (0, 1]");
}

Vec3 screw_motion_oracle(const Vec3& point, const Vec3& anchor, const Vec3& omega,
                         double nu_axial, double dt) {
  const double rate = omega.norm();
  if (rate == 0.0) return point;
  const Vec3 k = omega / rate;
  const double angle = rate * dt;
  const Vec3 v = point - anchor;
  const Vec3 rotated =
      v * std::cos(angle) + k.cross(v) * std::sin(angle) + k * k.dot(v) * (1.0 - std::cos(angle));
  return anchor + rotated + k * nu_axial * dt;
}

Scene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> box(-0.5 * cfg.body_size, 0.5 * cfg.body_size);
  std::uniform_real_distribution<double> scale(0.02 * cfg.body_size, 0.05 * cfg.body_size);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);

  Scene scene;
  scene.config = cfg;
  for (int b = 0; b < cfg.n_bodies; ++b) {
    const Vec3 center(b * cfg.body_spacing, 0.0, 0.0);
    BodyInfo info;
    info.kind = cfg.kind_of(b);
    info.truth = ground_truth_params(info.kind, center, cfg, rng);
    const Vec3 color = body_color(b, cfg.n_bodies);
    std::vector<Vec3> means;
    for (int p = 0; p < cfg.primitives_per_body; ++p) {
      Primitive prim;
      prim.mu = center + Vec3(box(rng), box(rng), box(rng));
      prim.scale = Vec3(scale(rng), scale(rng), scale(rng));
      prim.orient = random_orientation(rng);
      prim.profile.mu_t = unit(rng);
      prim.profile.s_t = cfg.temporal_scale;
      prim.profile.alpha = unit(rng) < cfg.dead_fraction ? cfg.dead_alpha : cfg.alpha;
      prim.color = (color + Vec3(jitter(rng), jitter(rng), jitter(rng))).cwiseMax(0.0).cwiseMin(1.0);
      means.push_back(prim.mu);
      scene.prims.push_back(prim);
      scene.body.push_back(b);
      scene.ground_truth.push_back(info.truth);
    }
    info.diameter = max_pairwise_distance(means);
    scene.bodies.push_back(info);
  }

  auto& data = scene.data;
  for (int k = 0; k < cfg.n_timesteps; ++k) {
    data.times.push_back(static_cast<double>(k) / static_cast<double>(cfg.n_timesteps - 1));
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& prim = scene.prims[i];
    const auto& truth = scene.ground_truth[i];
    const auto kind = scene.bodies[static_cast<std::size_t>(scene.body[i])].kind;
    for (double t : data.times) {
      Vec3 y = deform(prim, truth, t).mean;
      if (kind == MotionKind::kConstantTwist) {
        const auto& base = truth.twists.base;
        const double axial = base.nu.dot(base.omega.normalized());
        const Vec3 check =
            screw_motion_oracle(prim.mu, truth.anchor, base.omega, axial, t - prim.profile.mu_t);
        if ((check - y).norm() > 1e-9) {
          throw std::logic_error("generate_scene: deform disagrees with screw-motion oracle");
        }
      }
      if (cfg.noise_sigma > 0.0) {
        y += cfg.noise_sigma * Vec3(noise(rng), noise(rng), noise(rng));
      }
      data.targets.push_back(y);
      data.weights.push_back(temporal_visibility(prim.profile, t));
    }
  }
  return scene;
}

Vec3 model_position(const Primitive& prim, const MotionParams& params, double t, MotionModel model) {
  switch (model) {
    case MotionModel::kFull: return deform(prim, params, t, GaugeMode::kFixed).mean;
    case MotionModel::kNoGaugeFix: return deform(prim, params, t, GaugeMode::kDisabled).mean;
    case MotionModel::kLinear:
      return linear_position(prim.mu, params.twists.base.nu, prim.profile.mu_t, t);
  }
  return prim.mu;
}

double trajectory_loss(std::span<const Primitive> prims, std::span<const MotionParams> params,
                       const TrajectoryData& data, MotionModel model) {
  check_shapes(prims.size(), params.size(), data);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    for (std::size_t k = 0; k < data.n_times(); ++k) {
      const std::size_t idx = data.index(i, k);
      const double w = data.weights[idx];
      num += w * (model_position(prims[i], params[i], data.times[k], model) - data.targets[idx])
                     .squaredNorm();
      den += w;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

TrajectoryGradient trajectory_loss_with_grads(std::span<const Primitive> prims,
                                              std::span<const MotionParams> params,
                                              const TrajectoryData& data, MotionModel model) {
  check_shapes(prims.size(), params.size(), data);
  TrajectoryGradient out;
  out.grad.assign(prims.size(), MotionVector::Zero());
  out.spatial_cue.assign(prims.size(), 0.0);
  double den = 0.0;
  for (double w : data.weights) den += w;
  if (den <= 0.0) return out;

  double num = 0.0;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    double cue2 = 0.0;
    for (std::size_t k = 0; k < data.n_times(); ++k) {
      const std::size_t idx = data.index(i, k);
      const double w = data.weights[idx];
      Vec3 pos;
      const MeanJacobian jac = model_jacobian(prims[i], params[i], data.times[k], model, pos);
      const Vec3 r = pos - data.targets[idx];
      num += w * r.squaredNorm();
      const Vec3 dmean = (2.0 * w / den) * r;
      out.grad[i] += jac.transpose() * dmean;
      cue2 += dmean.squaredNorm();
    }
    out.spatial_cue[i] = std::sqrt(cue2);
  }
  out.loss = num / den;
  return out;
}

void FitOptions::validate() const {
  auto fail = [](const std::string& what) { throw InvalidInput("fit options: " + what); };
  if (!weights.valid()) fail("loss weights must be non-negative with k >= 1");
  if (!relocation.valid()) fail("relocation config out of range");
  if (iterations < 1) fail("iterations must be >= 1");
  if (!(lr_twist > 0.0 && lr_anchor > 0.0)) fail("learning rates must be > 0");
  if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0)) fail("lr_final_ratio must be in (0, 1]");
  if (warmup < 0 || monotone_window < 1) fail("bad monotonicity window");
  if (!(divergence_factor > 1.0)) fail("divergence_factor must be > 1");
}

FitState initial_state(const Scene& scene, const FitOptions& options) {
  FitState s;
  s.prims = scene.prims;
  s.params.assign(scene.size(), MotionParams{});
  s.body = scene.body;
  s.origin.resize(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    s.origin[i] = i;
    if (options.anchors_at_truth) s.params[i].anchor = scene.ground_truth[i].anchor;
  }
  s.model = options.model;
  s.anchors_at_truth = options.anchors_at_truth;
  return s;
}

TrajectoryData aligned_data(const Scene& scene, const FitState& state) {
  TrajectoryData d;
  d.times = scene.data.times;
  const std::size_t nt = d.n_times();
  d.targets.reserve(state.size() * nt);
  d.weights.reserve(state.size() * nt);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const std::size_t src = state.origin.at(i);
    if (src >= scene.size()) throw InvalidInput("fit state references a missing scene slot");
    for (std::size_t k = 0; k < nt; ++k) {
      d.targets.push_back(scene.data.targets[scene.data.index(src, k)]);
      d.weights.push_back(scene.data.weights[scene.data.index(src, k)]);
    }
  }
  return d;
}

ObjectiveEvaluation evaluate_objective(const FitState& state, const TrajectoryData& data,
                                       const NeighborGraph& graph, const LossWeights& weights) {
  ObjectiveEvaluation e;
  auto traj = trajectory_loss_with_grads(state.prims, state.params, data, state.model);
  e.data = traj.loss;
  e.grad = std::move(traj.grad);
  e.spatial_cue = std::move(traj.spatial_cue);
  e.reg = opacity_regularizer(state.prims);
  e.motion = motion_smoothness_loss(state.params);
  e.rigid = rigid_coherence_loss(state.prims, state.params, graph, weights.lambda_c);
  accumulate_motion_smoothness_gradient(state.params, e.grad, weights.w_motion);
  accumulate_rigid_coherence_gradient(state.prims, state.params, graph, weights.lambda_c, e.grad,
                                      weights.w_rigid);
  e.total = total_objective(e.data, e.reg, e.motion, e.rigid, weights);
  return e;
}

FitResult fit(const Scene& scene, const FitOptions& options) {
  options.validate();
  if (scene.size() == 0) throw InvalidInput("fit: empty scene");
  const auto start = std::chrono::steady_clock::now();

  FitResult result;
  FitState& state = result.state;
  FitReport& report = result.report;
  state = initial_state(scene, options);
  TrajectoryData data = aligned_data(scene, state);
  NeighborGraph graph = build_graph(state, options.weights);

  const std::size_t n = state.size();
  std::vector<MotionVector> first(n, MotionVector::Zero());
  std::vector<MotionVector> second(n, MotionVector::Zero());
  std::vector<int> steps(n, 0);
  GradientCueAccumulator cues(n);
  const std::vector<double> no_temporal(n, 0.0);
  std::mt19937_64 rng(options.relocation.rng_seed);

  MotionVector lr_scale;
  lr_scale.head<24>().setConstant(options.lr_twist);
  lr_scale.tail<3>().setConstant(options.anchors_at_truth ? 0.0 : options.lr_anchor);
  if (options.model == MotionModel::kLinear) lr_scale.tail<3>().setZero();

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-15;
  const int iters = options.iterations;
  double initial = 0.0;

  for (int it = 0; it < iters; ++it) {
    auto e = evaluate_objective(state, data, graph, options.weights);
    if (it == 0) initial = e.total;
    if (!std::isfinite(e.total) ||
        (initial > 0.0 && e.total > options.divergence_factor * initial)) {
      report.diverged = true;
      report.diagnostic = "objective " + std::to_string(e.total) + " at iteration " +
                          std::to_string(it) + " exceeds " +
                          std::to_string(options.divergence_factor) + " x initial " +
                          std::to_string(initial);
      break;
    }
    report.loss_history.push_back(e.total);
    report.budget_history.push_back(state.size());
    accumulate_gradient_cues(cues, e.spatial_cue, no_temporal);

    const double frac = iters > 1 ? static_cast<double>(it) / (iters - 1) : 0.0;
    const double decay = std::pow(options.lr_final_ratio, frac);
    for (std::size_t i = 0; i < n; ++i) {
      const MotionVector& g = e.grad[i];
      MotionVector x = state.params[i].to_vector();
      if (options.optimizer == OptimizerKind::kAdam) {
        const int step = ++steps[i];
        first[i] = kBeta1 * first[i] + (1.0 - kBeta1) * g;
        second[i] = kBeta2 * second[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(kBeta1, step);
        const double c2 = 1.0 - std::pow(kBeta2, step);
        const MotionVector m_hat = first[i] / c1;
        const MotionVector v_hat = second[i] / c2;
        x.array() -= decay * lr_scale.array() * m_hat.array() / (v_hat.array().sqrt() + kAdamEps);
      } else {
        x.array() -= decay * lr_scale.array() * g.array();
      }
      state.params[i] = MotionParams::from_vector(x);
    }

    const bool reloc_due = (it + 1) % options.relocation.period == 0 && it + 1 < iters;
    if (reloc_due) {
      const auto gathered = gather_cues(state.prims, state.params, cues.spatial, cues.temporal);
      const auto outcome = relocate(state.prims, state.params, gathered, options.relocation, rng);
      ++report.relocation_events;
      if (outcome.skipped_no_alive) ++report.skipped_relocations;
      for (const auto& [dest, src] : outcome.clones) {
        state.body[dest] = state.body[src];
        state.origin[dest] = state.origin[src];
        first[dest].setZero();
        second[dest].setZero();
        steps[dest] = 0;
      }
      report.relocated_primitives += outcome.clones.size();
      if (!outcome.clones.empty()) {
        data = aligned_data(scene, state);
        graph = build_graph(state, options.weights);
      }
      cues.reset();
    }
  }

  const auto final_eval = evaluate_objective(state, data, graph, options.weights);
  report.final_loss = final_eval.total;
  report.final_rmse = std::sqrt(final_eval.data);
  report.body_twist_error = evaluate(state, scene).body_twist_error;

  const auto& h = report.loss_history;
  const std::size_t w = static_cast<std::size_t>(options.monotone_window);
  for (std::size_t k = static_cast<std::size_t>(options.warmup); k + w < h.size(); ++k) {
    if (h[k + w] > h[k] * (1.0 + 1e-9) + 1e-300) {
      report.flagged_non_monotone = true;
      break;
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Metrics evaluate(const FitState& state, const Scene& scene) {
  Metrics m;
  const auto data = aligned_data(scene, state);
  m.weighted_rmse = std::sqrt(trajectory_loss(state.prims, state.params, data, state.model));
  m.primitive_count = state.size();
  for (int b : state.body) {
    if (b < 0 || static_cast<std::size_t>(b) >= scene.bodies.size()) {
      throw InvalidInput("fit state references a missing body");
    }
  }
  std::vector<double> num(scene.bodies.size(), 0.0);
  std::vector<double> den(scene.bodies.size(), 0.0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto b = static_cast<std::size_t>(state.body[i]);
    for (std::size_t k = 0; k < data.n_times(); ++k) {
      const auto idx = data.index(i, k);
      const Vec3 pos = model_position(state.prims[i], state.params[i], data.times[k], state.model);
      num[b] += data.weights[idx] * (pos - data.targets[idx]).squaredNorm();
      den[b] += data.weights[idx];
    }
  }
  m.body_rmse.resize(scene.bodies.size());
  for (std::size_t b = 0; b < num.size(); ++b) {
    m.body_rmse[b] = den[b] > 0.0 ? std::sqrt(num[b] / den[b]) : kNaN;
  }
  m.body_twist_error.assign(scene.bodies.size(), kNaN);
  if (state.anchors_at_truth) {
    std::vector<double> sum(scene.bodies.size(), 0.0);
    std::vector<int> count(scene.bodies.size(), 0);
    for (std::size_t i = 0; i < state.size(); ++i) {
      const auto b = static_cast<std::size_t>(state.body[i]);
      const auto& truth = scene.ground_truth[state.origin[i]].twists.base;
      sum[b] += (state.params[i].twists.base - truth).as_vector().norm();
      ++count[b];
    }
    for (std::size_t b = 0; b < sum.size(); ++b) {
      if (count[b] > 0) m.body_twist_error[b] = sum[b] / count[b];
    }
  }
  return m;
}

}  // namespace trigs
