#pragma once

// Elastic-net penalty on codes and the mixed-norm ball constraining
// dictionary columns.

#include <span>

#include "somf/matrix.hpp"

namespace somf {

// lambda * ((1 - l1_ratio) * ||a||_2^2 + l1_ratio * ||a||_1)
struct PenaltyParams {
  double lambda = 0.1;
  double l1_ratio = 0.9;  // 1 = lasso, 0 = ridge
};

// Columns live in { d : mu * ||d||_1 + (1 - mu) * ||d||_2^2 <= radius }.
struct BallParams {
  double mu = 0.0;  // 0 = euclidean ball, 1 = l1 ball
};

double soft_threshold(double x, double threshold);

double penalty_value(std::span<const double> a, const PenaltyParams& p);

// mu * ||d||_1 + (1 - mu) * ||d||_2^2. Separable across coordinates, which
// is what makes masked/partial radius bookkeeping exact.
double ball_norm(std::span<const double> d, const BallParams& b);

// Euclidean projection onto the ball of the given radius (> 0). Feasible
// inputs are returned unchanged. mu = 0 is an exact rescale, mu = 1 the
// exact sorted l1-ball projection; in between the KKT multiplier is found
// by bisection to 1e-12 and the returned point is always feasible.
DenseVector project_ball(std::span<const double> d, const BallParams& b, double radius);

}  // namespace somf
