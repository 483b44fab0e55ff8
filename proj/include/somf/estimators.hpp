#pragma once

// Per-sample running averages of the code-problem inputs.
//
// Sample i keeps G_i ~ D^T D and beta_i ~ D^T x_i, refreshed from masked
// observations with a decaying weight gamma_c that depends on how many times
// the sample has been seen. Averaging pulls the variance injected by the
// coordinate mask out of the code solve.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "somf/mask.hpp"
#include "somf/matrix.hpp"

namespace somf {

// Iteration weights w_t = t^-v and observation weights gamma_c = c^-(2.5-2v).
// Both start at exactly 1, so the first update overwrites the zero initial
// state. v must lie strictly inside (3/4, 1) for the two decays to balance;
// validation lives with the run config, which can deliberately wave an
// out-of-range exponent through.
struct WeightSchedule {
  double v = 0.9;

  double w(std::uint64_t t) const;
  double gamma(std::uint64_t c) const;
  bool valid() const { return v > 0.75 && v < 1.0; }
};

// Weights the recursive update implicitly assigns to each of the first
// `count` observations. They telescope to sum exactly to 1.
std::vector<double> explicit_weights(const WeightSchedule& schedule, std::size_t count);

class EstimatorStore {
 public:
  EstimatorStore() = default;
  EstimatorStore(std::size_t n_samples, std::size_t k, WeightSchedule schedule,
                 bool no_averaging = false);

  // Blend a masked observation (gram ~ D^T M D, correlation ~ D^T M x_i)
  // into sample i's estimators. Bumps the observation counter and applies
  // its gamma; gram symmetry is restored exactly after the blend.
  void update(std::size_t i, const DenseMatrix& gram, const DenseVector& correlation);

  const DenseMatrix& gram(std::size_t i) const { return grams_[i]; }
  const DenseVector& correlation(std::size_t i) const { return correlations_[i]; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }

  std::size_t n_samples() const { return grams_.size(); }
  std::size_t k() const { return k_; }
  const WeightSchedule& schedule() const { return schedule_; }
  bool no_averaging() const { return no_averaging_; }

  // Checkpoint access.
  DenseMatrix& mutable_gram(std::size_t i) { return grams_[i]; }
  DenseVector& mutable_correlation(std::size_t i) { return correlations_[i]; }
  void set_count(std::size_t i, std::uint64_t c) { counts_[i] = c; }

 private:
  std::size_t k_ = 0;
  WeightSchedule schedule_;
  bool no_averaging_ = false;
  std::vector<DenseMatrix> grams_;
  std::vector<DenseVector> correlations_;
  std::vector<std::uint64_t> counts_;
};

// Observe sample i through a mask: computes D^T M D and D^T M x_i over the
// masked rows only and folds them into the store.
void update_estimators(EstimatorStore& store, std::size_t i, const DenseMatrix& d,
                       std::span<const double> x, const Mask& mask);

}  // namespace somf
