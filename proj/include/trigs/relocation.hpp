#pragma once

// Fixed-budget relocation: near-transparent primitives are overwritten by
// shrunken clones of alive ones drawn from a difficulty-cue distribution.

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "trigs/anchor.hpp"

namespace trigs {

struct PrimitiveCues {
  double sigmoid_opacity = 0.0;
  double nu_norm = 0.0;             // ||nu_base||
  double temporal_scale_exp = 0.0;  // exp(log s_t) = s_t
  double grad_spatial = 0.0;        // accumulated ||dL/dmu(t)||
  double grad_temporal = 0.0;       // accumulated |dL/dmu_t|
};

struct RelocationConfig {
  double opacity_threshold = 0.005;
  int period = 100;
  double scale_factor = 0.66;
  std::uint64_t rng_seed = 0;

  bool valid() const;
};

struct OpacityPartition {
  std::vector<std::size_t> inactive;
  std::vector<std::size_t> alive;
};

/// inactive: alpha < tau_alpha, alive: everything else.
OpacityPartition partition_by_opacity(std::span<const Primitive> prims, double tau_alpha);

/// Cues derived from the current state plus accumulated gradient magnitudes.
std::vector<PrimitiveCues> gather_cues(std::span<const Primitive> prims,
                                       std::span<const MotionParams> params,
                                       std::span<const double> grad_spatial,
                                       std::span<const double> grad_temporal);

/// Sampling probabilities over the given (alive) cues. Each channel is
/// normalized over the set; a channel summing to zero contributes uniformly.
std::vector<double> sampling_distribution(std::span<const PrimitiveCues> alive_cues);

/// Running per-primitive gradient magnitudes between relocation events.
struct GradientCueAccumulator {
  std::vector<double> spatial;
  std::vector<double> temporal;

  explicit GradientCueAccumulator(std::size_t n = 0) : spatial(n, 0.0), temporal(n, 0.0) {}
  void reset();
};

/// running += step, entry by entry. Throws std::invalid_argument on size mismatch.
void accumulate_gradient_cues(GradientCueAccumulator& running, std::span<const double> step_spatial,
                              std::span<const double> step_temporal);

struct RelocationOutcome {
  std::vector<std::pair<std::size_t, std::size_t>> clones;  // (destination, source)
  bool skipped_no_alive = false;
};

/// Replaces every inactive primitive with a clone of a source sampled from
/// the alive set (with replacement). The clone copies all state except
/// scale, which is multiplied by config.scale_factor. Count is unchanged.
RelocationOutcome relocate(std::vector<Primitive>& prims, std::vector<MotionParams>& params,
                           std::span<const PrimitiveCues> cues, const RelocationConfig& config,
                           std::mt19937_64& rng);

}  // namespace trigs
