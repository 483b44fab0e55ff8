#pragma once

// Elastic-net code solve:
//   min_a  0.5 a^T G a - a^T beta + lambda ((1-nu) ||a||_2^2 + nu ||a||_1)
// by cyclic coordinate descent with exact single-coordinate minimization.
// G only has to be symmetric PSD; it can come from an exact gram or from a
// subsampled running estimate.

#include <cstddef>
#include <span>

#include "somf/matrix.hpp"
#include "somf/regularizers.hpp"

namespace somf {

struct CodeProblem {
  const DenseMatrix& gram;          // k x k, symmetric PSD
  std::span<const double> correlation;  // length k
  PenaltyParams penalty;
};

struct SolveInfo {
  std::size_t sweeps = 0;
  double kkt = 0.0;               // residual at exit
  std::size_t degenerate = 0;     // coordinates with zero curvature, forced to 0
};

// Max-norm distance of -gradient(smooth part) from the subdifferential of
// the l1 term. Zero exactly at the minimizer.
double kkt_residual(const CodeProblem& problem, std::span<const double> a);

double code_objective(const CodeProblem& problem, std::span<const double> a);

// Sweeps until the KKT residual drops below tol or max_sweeps is hit.
// Starts from zero; the minimizer is unique whenever the objective is
// strictly convex, so the start only affects the path, not the answer.
DenseVector solve_code(const CodeProblem& problem, double tol = 1e-6,
                       std::size_t max_sweeps = 100, SolveInfo* info = nullptr);

}  // namespace somf
