#include "trigs/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace trigs {

namespace {

Twist acceleration(const BezierTwists& t) { return t.ctrl0 - 2.0 * t.ctrl1 + t.ctrl2; }

void check_sizes(std::size_t prims, std::size_t params, std::size_t graph) {
  if (prims != params || prims != graph) {
    throw std::invalid_argument("rigid coherence: primitive, parameter and graph sizes differ");
  }
}

}  // namespace

bool LossWeights::valid() const {
  return w_reg >= 0.0 && w_motion >= 0.0 && w_rigid >= 0.0 && lambda_c >= 0.0 && k_neighbors >= 1;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double motion_smoothness_loss(const BezierTwists& twists) {
  return acceleration(twists).squared_norm();
}

double motion_smoothness_loss(std::span<const MotionParams> params) {
  if (params.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : params) sum += motion_smoothness_loss(p.twists);
  return sum / static_cast<double>(params.size());
}

void accumulate_motion_smoothness_gradient(std::span<const MotionParams> params,
                                           std::span<MotionVector> grad, double weight) {
  if (params.empty()) return;
  const double scale = 2.0 * weight / static_cast<double>(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Vec6 b = acceleration(params[i].twists).as_vector();
    grad[i].segment<6>(6) += scale * b;
    grad[i].segment<6>(12) += -2.0 * scale * b;
    grad[i].segment<6>(18) += scale * b;
  }
}

double color_affinity(const Vec3& c_i, const Vec3& c_j, double lambda_c) {
  return std::exp(-lambda_c * (c_i - c_j).squaredNorm());
}

NeighborGraph knn_canonical(std::span<const Primitive> prims, int k) {
  const std::size_t n = prims.size();
  if (n < 2) throw std::invalid_argument("knn_canonical: need at least two primitives");
  if (k < 1) throw std::invalid_argument("knn_canonical: k must be >= 1");
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);

  NeighborGraph graph;
  graph.neighbors.resize(n);
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) candidates.emplace_back((prims[i].mu - prims[j].mu).squaredNorm(), j);
    }
    // Lexicographic pair order gives the lower-index tie break.
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(count),
                      candidates.end());
    auto& row = graph.neighbors[i];
    row.reserve(count);
    for (std::size_t m = 0; m < count; ++m) row.push_back(candidates[m].second);
  }
  return graph;
}

double rigid_coherence_loss(std::span<const Primitive> prims, std::span<const MotionParams> params,
                            const NeighborGraph& graph, double lambda_c) {
  check_sizes(prims.size(), params.size(), graph.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    for (std::size_t j : graph.neighbors[i]) {
      const double kij = color_affinity(prims[i].color, prims[j].color, lambda_c);
      sum += kij * (params[i].twists.base - params[j].twists.base).squared_norm();
    }
  }
  return sum;
}

void accumulate_rigid_coherence_gradient(std::span<const Primitive> prims,
                                         std::span<const MotionParams> params,
                                         const NeighborGraph& graph, double lambda_c,
                                         std::span<MotionVector> grad, double weight) {
  check_sizes(prims.size(), params.size(), graph.size());
  for (std::size_t i = 0; i < prims.size(); ++i) {
    for (std::size_t j : graph.neighbors[i]) {
      const double kij = color_affinity(prims[i].color, prims[j].color, lambda_c);
      const Vec6 diff = (params[i].twists.base - params[j].twists.base).as_vector();
      grad[i].segment<6>(0) += 2.0 * weight * kij * diff;
      grad[j].segment<6>(0) -= 2.0 * weight * kij * diff;
    }
  }
}

double opacity_regularizer(std::span<const Primitive> prims) {
  if (prims.empty()) throw std::invalid_argument("opacity_regularizer: empty scene");
  double sum = 0.0;
  for (const auto& p : prims) sum += p.alpha();
  return sum / static_cast<double>(prims.size());
}

double total_objective(double data_loss, double reg, double motion, double rigid,
                       const LossWeights& w) {
  return data_loss + w.w_reg * reg + w.w_motion * motion + w.w_rigid * rigid;
}

}  // namespace trigs
