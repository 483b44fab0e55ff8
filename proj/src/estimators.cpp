#include "somf/estimators.hpp"

#include <cmath>
#include <string>

#include "somf/errors.hpp"

namespace somf {

double WeightSchedule::w(std::uint64_t t) const {
  return std::pow(static_cast<double>(t), -v);
}

double WeightSchedule::gamma(std::uint64_t c) const {
  return std::pow(static_cast<double>(c), -(2.5 - 2.0 * v));
}

std::vector<double> explicit_weights(const WeightSchedule& schedule, std::size_t count) {
  std::vector<double> weights(count, 0.0);
  double tail = 1.0;  // prod_{l > j} (1 - gamma_l), built from the back
  for (std::size_t j = count; j > 0; --j) {
    const double g = schedule.gamma(j);
    weights[j - 1] = g * tail;
    tail *= 1.0 - g;
  }
  return weights;
}

EstimatorStore::EstimatorStore(std::size_t n_samples, std::size_t k,
                               WeightSchedule schedule, bool no_averaging)
    : k_(k), schedule_(schedule), no_averaging_(no_averaging) {
  if (n_samples == 0 || k == 0) {
    throw ConfigError("estimator store needs n_samples >= 1 and k >= 1");
  }
  grams_.reserve(n_samples);
  correlations_.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    grams_.emplace_back(k, k);
    correlations_.emplace_back(k);
  }
  counts_.assign(n_samples, 0);
}

void EstimatorStore::update(std::size_t i, const DenseMatrix& gram,
                            const DenseVector& correlation) {
  if (i >= grams_.size()) {
    throw DimensionError("estimator update: sample index " + std::to_string(i) +
                         " out of range");
  }
  if (gram.rows() != k_ || gram.cols() != k_ || correlation.dim() != k_) {
    throw DimensionError("estimator update: observation shape mismatch");
  }
  const std::uint64_t c = ++counts_[i];
  const double g = no_averaging_ ? 1.0 : schedule_.gamma(c);
  const double keep = 1.0 - g;

  DenseMatrix& gi = grams_[i];
  for (std::size_t col = 0; col < k_; ++col) {
    double* dst = gi.col(col);
    const double* src = gram.col(col);
    for (std::size_t row = 0; row < k_; ++row) dst[row] = keep * dst[row] + g * src[row];
  }
  // Restore exact symmetry; the blend preserves it in exact arithmetic but
  // solvers downstream assume it bit for bit.
  for (std::size_t col = 0; col < k_; ++col) {
    for (std::size_t row = 0; row < col; ++row) {
      const double avg = 0.5 * (gi(row, col) + gi(col, row));
      gi(row, col) = avg;
      gi(col, row) = avg;
    }
  }

  DenseVector& bi = correlations_[i];
  for (std::size_t row = 0; row < k_; ++row) bi[row] = keep * bi[row] + g * correlation[row];
}

void update_estimators(EstimatorStore& store, std::size_t i, const DenseMatrix& d,
                       std::span<const double> x, const Mask& mask) {
  store.update(i, masked_gram(d, mask), masked_correlation(d, x, mask));
}

}  // namespace somf
