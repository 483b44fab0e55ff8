#include "somf/code_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "somf/errors.hpp"

namespace somf {

namespace {

void check_problem(const CodeProblem& p) {
  const std::size_t k = p.gram.rows();
  if (p.gram.cols() != k) throw DimensionError("code solve: gram matrix must be square");
  if (p.correlation.size() != k) {
    throw DimensionError("code solve: correlation length " +
                         std::to_string(p.correlation.size()) + " vs gram size " +
                         std::to_string(k));
  }
}

}  // namespace

double kkt_residual(const CodeProblem& problem, std::span<const double> a) {
  check_problem(problem);
  const std::size_t k = problem.gram.rows();
  if (a.size() != k) throw DimensionError("kkt_residual: code length mismatch");
  const double l1_weight = problem.penalty.lambda * problem.penalty.l1_ratio;
  const double ridge = 2.0 * problem.penalty.lambda * (1.0 - problem.penalty.l1_ratio);

  double worst = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double ga = 0.0;
    for (std::size_t l = 0; l < k; ++l) ga += problem.gram(j, l) * a[l];
    const double z = problem.correlation[j] - ga - ridge * a[j];
    double viol;
    if (a[j] > 0.0) {
      viol = std::abs(z - l1_weight);
    } else if (a[j] < 0.0) {
      viol = std::abs(z + l1_weight);
    } else {
      viol = std::max(0.0, std::abs(z) - l1_weight);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

double code_objective(const CodeProblem& problem, std::span<const double> a) {
  check_problem(problem);
  const std::size_t k = problem.gram.rows();
  double quad = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double ga = 0.0;
    for (std::size_t l = 0; l < k; ++l) ga += problem.gram(j, l) * a[l];
    quad += a[j] * ga;
  }
  return 0.5 * quad - dot(problem.correlation, a) + penalty_value(a, problem.penalty);
}

DenseVector solve_code(const CodeProblem& problem, double tol, std::size_t max_sweeps,
                       SolveInfo* info) {
  check_problem(problem);
  if (tol <= 0.0) throw ConfigError("code_tol must be > 0");
  if (max_sweeps == 0) throw ConfigError("code_max_sweeps must be >= 1");

  const std::size_t k = problem.gram.rows();
  const double l1_weight = problem.penalty.lambda * problem.penalty.l1_ratio;
  const double ridge = 2.0 * problem.penalty.lambda * (1.0 - problem.penalty.l1_ratio);

  DenseVector a(k);
  SolveInfo local;

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < k; ++j) {
      const double denom = problem.gram(j, j) + ridge;
      double ga = 0.0;
      for (std::size_t l = 0; l < k; ++l) ga += problem.gram(j, l) * a[l];
      const double rho = problem.correlation[j] - ga + problem.gram(j, j) * a[j];
      if (denom <= 0.0) {
        // Flat direction: the coordinate carries no curvature, leave it out.
        if (sweep == 0 && std::abs(rho) > l1_weight) ++local.degenerate;
        a[j] = 0.0;
        continue;
      }
      a[j] = soft_threshold(rho, l1_weight) / denom;
    }
    local.sweeps = sweep + 1;
    local.kkt = kkt_residual(problem, a);
    if (local.kkt <= tol) break;
  }

  if (info) *info = local;
  return a;
}

}  // namespace somf
