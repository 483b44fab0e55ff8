#include "somf/surrogate.hpp"

#include <cmath>
#include <string>

#include "somf/errors.hpp"

namespace somf {

namespace {

// Columns with less curvature than this are left where they are.
constexpr double kCurvatureFloor = 1e-12;

void check_batch(const std::vector<std::span<const double>>& xs,
                 const std::vector<DenseVector>& alphas, double w, std::size_t p,
                 std::size_t k) {
  if (xs.empty() || xs.size() != alphas.size()) {
    throw DimensionError("stats update: batch of " + std::to_string(xs.size()) +
                         " samples vs " + std::to_string(alphas.size()) + " codes");
  }
  for (const auto& x : xs) {
    if (x.size() != p) throw DimensionError("stats update: sample length mismatch");
  }
  for (const auto& a : alphas) {
    if (a.dim() != k) throw DimensionError("stats update: code length mismatch");
  }
  if (!(w > 0.0) || w > 1.0) {
    throw ConfigError("stats update weight must be in (0, 1], got " + std::to_string(w));
  }
}

}  // namespace

SurrogateStats::SurrogateStats(std::size_t p, std::size_t k) : b_(p, k), c_(k, k) {}

void SurrogateStats::update_b_rows(const std::vector<std::span<const double>>& xs,
                                   const std::vector<DenseVector>& alphas, double w,
                                   const std::vector<std::size_t>& rows) {
  const double keep = 1.0 - w;
  const double winv = w / static_cast<double>(xs.size());
  const std::size_t k = c_.rows();
  for (std::size_t j = 0; j < k; ++j) {
    double* bj = b_.col(j);
    for (const std::size_t i : rows) {
      double acc = 0.0;
      for (std::size_t b = 0; b < xs.size(); ++b) acc += xs[b][i] * alphas[b][j];
      bj[i] = keep * bj[i] + winv * acc;
    }
  }
}

void SurrogateStats::update_full(const std::vector<std::span<const double>>& xs,
                                 const std::vector<DenseVector>& alphas, double w,
                                 const PenaltyParams& penalty) {
  update_sync(xs, alphas, w, penalty, Mask::full_mask(b_.rows()));
}

void SurrogateStats::update_sync(const std::vector<std::span<const double>>& xs,
                                 const std::vector<DenseVector>& alphas, double w,
                                 const PenaltyParams& penalty, const Mask& mask) {
  check_batch(xs, alphas, w, b_.rows(), c_.rows());
  if (mask.dim != b_.rows()) throw DimensionError("stats update: mask dimension mismatch");

  const double keep = 1.0 - w;
  const double winv = w / static_cast<double>(xs.size());
  const std::size_t k = c_.rows();

  for (std::size_t j = 0; j < k; ++j) {
    double* cj = c_.col(j);
    for (std::size_t l = 0; l < k; ++l) {
      double acc = 0.0;
      for (std::size_t b = 0; b < xs.size(); ++b) acc += alphas[b][l] * alphas[b][j];
      cj[l] = keep * cj[l] + winv * acc;
    }
  }

  double offset_acc = 0.0;
  for (std::size_t b = 0; b < xs.size(); ++b) {
    offset_acc += 0.5 * squared_norm(xs[b]) + penalty_value(alphas[b], penalty);
  }
  loss_offset_ = keep * loss_offset_ + winv * offset_acc;

  update_b_rows(xs, alphas, w, mask.indices);
}

void SurrogateStats::update_complement(const std::vector<std::span<const double>>& xs,
                                       const std::vector<DenseVector>& alphas, double w,
                                       const Mask& mask) {
  check_batch(xs, alphas, w, b_.rows(), c_.rows());
  if (mask.dim != b_.rows()) throw DimensionError("stats update: mask dimension mismatch");
  if (mask.full()) return;
  update_b_rows(xs, alphas, w, mask.complement());
}

void SurrogateStats::update_full(std::span<const double> x, const DenseVector& alpha,
                                 double w, const PenaltyParams& penalty) {
  update_full(std::vector<std::span<const double>>{x}, std::vector<DenseVector>{alpha}, w,
              penalty);
}

void Dictionary::refresh_norms() {
  column_norms.resize(d.cols());
  for (std::size_t j = 0; j < d.cols(); ++j) column_norms[j] = ball_norm(d.col_span(j), ball);
}

namespace {

// One full block-coordinate pass; shared by full_dict_update and the
// full-mask case of partial_dict_update.
DictUpdateInfo full_pass(Dictionary& dict, const SurrogateStats& stats) {
  DictUpdateInfo info;
  const std::size_t p = dict.d.rows();
  const std::size_t k = dict.d.cols();
  const DenseMatrix& c = stats.code_moment();
  const DenseMatrix& b = stats.data_moment();
  std::vector<double> grad(p);
  std::vector<double> u(p);

  for (std::size_t j = 0; j < k; ++j) {
    const double cjj = c(j, j);
    if (cjj <= kCurvatureFloor) {
      ++info.skipped;
      continue;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t l = 0; l < k; ++l) {
      const double clj = c(l, j);
      if (clj == 0.0) continue;
      const double* dl = dict.d.col(l);
      for (std::size_t i = 0; i < p; ++i) grad[i] += dl[i] * clj;
    }
    double* dj = dict.d.col(j);
    const double* bj = b.col(j);
    for (std::size_t i = 0; i < p; ++i) u[i] = dj[i] - (grad[i] - bj[i]) / cjj;

    const DenseVector v = project_ball(u, dict.ball, 1.0);
    for (std::size_t i = 0; i < p; ++i) {
      const double diff = v[i] - dj[i];
      info.delta_sq += diff * diff;
      dj[i] = v[i];
    }
    dict.column_norms[j] = ball_norm(dict.d.col_span(j), dict.ball);
  }
  return info;
}

}  // namespace

DictUpdateInfo full_dict_update(Dictionary& dict, const SurrogateStats& stats,
                                std::size_t passes) {
  if (dict.d.rows() != stats.p() || dict.d.cols() != stats.k()) {
    throw DimensionError("dictionary update: shape mismatch with statistics");
  }
  if (dict.column_norms.size() != dict.d.cols()) dict.refresh_norms();
  DictUpdateInfo info;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    const DictUpdateInfo one = full_pass(dict, stats);
    info.delta_sq += one.delta_sq;
    info.skipped += one.skipped;
    info.clamped += one.clamped;
  }
  return info;
}

DictUpdateInfo partial_dict_update(Dictionary& dict, const SurrogateStats& stats,
                                   const Mask& mask) {
  if (dict.d.rows() != stats.p() || dict.d.cols() != stats.k()) {
    throw DimensionError("dictionary update: shape mismatch with statistics");
  }
  if (mask.dim != dict.d.rows()) throw DimensionError("dictionary update: mask mismatch");
  if (dict.column_norms.size() != dict.d.cols()) dict.refresh_norms();
  if (mask.indices.empty()) return {};
  if (mask.full()) return full_pass(dict, stats);

  DictUpdateInfo info;
  const std::size_t k = dict.d.cols();
  const DenseMatrix& c = stats.code_moment();
  const DenseMatrix& b = stats.data_moment();
  const std::size_t m = mask.indices.size();
  const double mu = dict.ball.mu;
  std::vector<double> u(m);

  for (std::size_t j = 0; j < k; ++j) {
    const double cjj = c(j, j);
    if (cjj <= kCurvatureFloor) {
      ++info.skipped;
      continue;
    }
    double* dj = dict.d.col(j);
    const double* bj = b.col(j);

    // Budget left for the masked rows: frozen rows keep their share of the
    // unit ball, so the reduced radius is exact, not an approximation.
    double masked_old = 0.0;
    for (const std::size_t i : mask.indices) {
      masked_old += mu * std::abs(dj[i]) + (1.0 - mu) * dj[i] * dj[i];
    }
    const double radius = 1.0 - dict.column_norms[j] + masked_old;

    if (radius <= 0.0) {
      // Frozen rows already exhaust the budget (possible after the cached
      // norm accumulates rounding); retreat the masked rows to zero.
      for (const std::size_t i : mask.indices) {
        info.delta_sq += dj[i] * dj[i];
        dj[i] = 0.0;
      }
      dict.column_norms[j] += -masked_old;
      ++info.clamped;
      continue;
    }

    for (std::size_t a = 0; a < m; ++a) {
      const std::size_t i = mask.indices[a];
      double grad = 0.0;
      for (std::size_t l = 0; l < k; ++l) grad += dict.d(i, l) * c(l, j);
      u[a] = dj[i] - (grad - bj[i]) / cjj;
    }
    const DenseVector v = project_ball(u, dict.ball, radius);

    double masked_new = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      const std::size_t i = mask.indices[a];
      const double diff = v[a] - dj[i];
      info.delta_sq += diff * diff;
      dj[i] = v[a];
      masked_new += mu * std::abs(v[a]) + (1.0 - mu) * v[a] * v[a];
    }
    dict.column_norms[j] += masked_new - masked_old;
  }
  return info;
}

double surrogate_value(const DenseMatrix& d, const SurrogateStats& stats) {
  if (d.rows() != stats.p() || d.cols() != stats.k()) {
    throw DimensionError("surrogate_value: shape mismatch");
  }
  const DenseMatrix dc = matmul(d, stats.code_moment());
  const DenseMatrix& b = stats.data_moment();
  double quad = 0.0;
  double lin = 0.0;
  const std::size_t n = d.rows() * d.cols();
  for (std::size_t i = 0; i < n; ++i) {
    quad += d.data()[i] * dc.data()[i];
    lin += d.data()[i] * b.data()[i];
  }
  return 0.5 * quad - lin + stats.loss_offset();
}

}  // namespace somf
