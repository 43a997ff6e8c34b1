#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trigs/anchor.hpp"

namespace trigs {

/// neighbors[i] lists min(k, n-1) indices ordered by ascending canonical
/// distance to primitive i; equal distances resolve to the lower index.
struct NeighborGraph {
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const { return neighbors.size(); }
};

/// Objective weights. Defaults are the published training values.
struct LossWeights {
  double w_reg = 0.01;
  double w_motion = 0.0001;
  double w_rigid = 1.0;
  double lambda_c = 50.0;
  int k_neighbors = 3;

  bool valid() const;
};

double sigmoid(double x);

/// ||ctrl0 - 2 ctrl1 + ctrl2||^2 over all six components.
double motion_smoothness_loss(const BezierTwists& twists);

/// Mean of the per-primitive smoothness loss.
double motion_smoothness_loss(std::span<const MotionParams> params);

/// Adds d(mean smoothness)/d(params) into `grad` (one row per primitive).
void accumulate_motion_smoothness_gradient(std::span<const MotionParams> params,
                                           std::span<MotionVector> grad, double weight = 1.0);

/// exp(-lambda_c ||c_i - c_j||^2).
double color_affinity(const Vec3& c_i, const Vec3& c_j, double lambda_c);

/// Exact k-nearest neighbours on canonical means. Throws
/// std::invalid_argument for fewer than two primitives or k < 1.
NeighborGraph knn_canonical(std::span<const Primitive> prims, int k);

/// sum_i sum_{j in N(i)} K_ij (||nu_i - nu_j||^2 + ||omega_i - omega_j||^2)
/// over base twists.
double rigid_coherence_loss(std::span<const Primitive> prims, std::span<const MotionParams> params,
                            const NeighborGraph& graph, double lambda_c);

void accumulate_rigid_coherence_gradient(std::span<const Primitive> prims,
                                         std::span<const MotionParams> params,
                                         const NeighborGraph& graph, double lambda_c,
                                         std::span<MotionVector> grad, double weight = 1.0);

/// Mean activated opacity. Stand-in for the opacity regularizer of the
/// photometric pipeline; it has no motion gradient.
double opacity_regularizer(std::span<const Primitive> prims);

double total_objective(double data_loss, double reg, double motion, double rigid,
                       const LossWeights& w);

}  // namespace trigs
