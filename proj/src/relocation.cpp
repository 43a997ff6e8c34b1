#include "trigs/relocation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trigs {

namespace {

// Adds the self-normalized channel into `score`.
template <typename Proj>
void add_channel(std::span<const PrimitiveCues> cues, Proj proj, std::vector<double>& score) {
  double total = 0.0;
  for (const auto& c : cues) total += proj(c);
  const double n = static_cast<double>(cues.size());
  for (std::size_t i = 0; i < cues.size(); ++i) {
    score[i] += total > 0.0 ? proj(cues[i]) / total : 1.0 / n;
  }
}

}  // namespace

bool RelocationConfig::valid() const {
  return opacity_threshold > 0.0 && opacity_threshold < 1.0 && period >= 1 && scale_factor > 0.0 &&
         scale_factor <= 1.0;
}

OpacityPartition partition_by_opacity(std::span<const Primitive> prims, double tau_alpha) {
  OpacityPartition out;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    (prims[i].alpha() < tau_alpha ? out.inactive : out.alive).push_back(i);
  }
  return out;
}

std::vector<PrimitiveCues> gather_cues(std::span<const Primitive> prims,
                                       std::span<const MotionParams> params,
                                       std::span<const double> grad_spatial,
                                       std::span<const double> grad_temporal) {
  const std::size_t n = prims.size();
  if (params.size() != n || grad_spatial.size() != n || grad_temporal.size() != n) {
    throw std::invalid_argument("gather_cues: size mismatch");
  }
  std::vector<PrimitiveCues> cues(n);
  for (std::size_t i = 0; i < n; ++i) {
    cues[i].sigmoid_opacity = prims[i].alpha();
    cues[i].nu_norm = params[i].twists.base.nu.norm();
    cues[i].temporal_scale_exp = prims[i].profile.s_t;
    cues[i].grad_spatial = grad_spatial[i];
    cues[i].grad_temporal = grad_temporal[i];
  }
  return cues;
}

std::vector<double> sampling_distribution(std::span<const PrimitiveCues> alive_cues) {
  if (alive_cues.empty()) throw std::invalid_argument("sampling_distribution: empty alive set");
  std::vector<double> score(alive_cues.size(), 0.0);
  add_channel(alive_cues, [](const PrimitiveCues& c) { return c.sigmoid_opacity; }, score);
  add_channel(alive_cues, [](const PrimitiveCues& c) { return c.nu_norm * c.temporal_scale_exp; },
              score);
  add_channel(alive_cues, [](const PrimitiveCues& c) { return c.grad_spatial; }, score);
  add_channel(alive_cues, [](const PrimitiveCues& c) { return c.grad_temporal; }, score);
  // Every channel sums to one, so the total is 4 up to rounding.
  double total = 0.0;
  for (double s : score) total += s;
  for (double& s : score) s /= total;
  return score;
}

void GradientCueAccumulator::reset() {
  std::fill(spatial.begin(), spatial.end(), 0.0);
  std::fill(temporal.begin(), temporal.end(), 0.0);
}

void accumulate_gradient_cues(GradientCueAccumulator& running, std::span<const double> step_spatial,
                              std::span<const double> step_temporal) {
  if (step_spatial.size() != running.spatial.size() ||
      step_temporal.size() != running.temporal.size()) {
    throw std::invalid_argument("accumulate_gradient_cues: size mismatch");
  }
  for (std::size_t i = 0; i < step_spatial.size(); ++i) running.spatial[i] += step_spatial[i];
  for (std::size_t i = 0; i < step_temporal.size(); ++i) running.temporal[i] += step_temporal[i];
}

RelocationOutcome relocate(std::vector<Primitive>& prims, std::vector<MotionParams>& params,
                           std::span<const PrimitiveCues> cues, const RelocationConfig& config,
                           std::mt19937_64& rng) {
  if (!config.valid()) throw std::invalid_argument("relocate: invalid relocation config");
  if (prims.size() != params.size() || prims.size() != cues.size()) {
    throw std::invalid_argument("relocate: size mismatch");
  }
  RelocationOutcome outcome;
  const auto part = partition_by_opacity(prims, config.opacity_threshold);
  if (part.inactive.empty()) return outcome;
  if (part.alive.empty()) {
    outcome.skipped_no_alive = true;
    return outcome;
  }

  std::vector<PrimitiveCues> alive_cues;
  alive_cues.reserve(part.alive.size());
  for (std::size_t i : part.alive) alive_cues.push_back(cues[i]);
  const auto q = sampling_distribution(alive_cues);
  std::discrete_distribution<std::size_t> draw(q.begin(), q.end());

  for (std::size_t dest : part.inactive) {
    const std::size_t src = part.alive[draw(rng)];
    prims[dest] = prims[src];
    prims[dest].scale = prims[src].scale * config.scale_factor;
    params[dest] = params[src];
    outcome.clones.emplace_back(dest, src);
  }
  return outcome;
}

}  // namespace trigs
