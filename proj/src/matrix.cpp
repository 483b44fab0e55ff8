#include "somf/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "somf/errors.hpp"

namespace somf {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("matrix dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " times " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* cj = c.col(j);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double blj = b(l, j);
      if (blj == 0.0) continue;
      const double* al = a.col(l);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += al[i] * blj;
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  }
  return t;
}

DenseVector transpose_apply(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) {
    throw DimensionError("transpose_apply: vector length " + std::to_string(x.size()) +
                         " does not match " + std::to_string(a.rows()) + " rows");
  }
  DenseVector y(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double* aj = a.col(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) acc += aj[i] * x[i];
    y[j] = acc;
  }
  return y;
}

DenseMatrix masked_gram(const DenseMatrix& d, const Mask& mask) {
  if (mask.dim != d.rows()) {
    throw DimensionError("masked_gram: mask over " + std::to_string(mask.dim) +
                         " coordinates, matrix has " + std::to_string(d.rows()) +
                         " rows");
  }
  const std::size_t k = d.cols();
  DenseMatrix g(k, k);
  // Upper triangle first, masked rows ascending, then mirror. The mirror
  // makes G exactly symmetric regardless of rounding.
  for (std::size_t b = 0; b < k; ++b) {
    const double* db = d.col(b);
    for (std::size_t a = 0; a <= b; ++a) {
      const double* da = d.col(a);
      double acc = 0.0;
      for (const std::size_t i : mask.indices) acc += da[i] * db[i];
      g(a, b) = acc * mask.scale;
    }
  }
  for (std::size_t b = 0; b < k; ++b) {
    for (std::size_t a = 0; a < b; ++a) g(b, a) = g(a, b);
  }
  return g;
}

DenseVector masked_correlation(const DenseMatrix& d, std::span<const double> x,
                               const Mask& mask) {
  if (mask.dim != d.rows() || x.size() != d.rows()) {
    throw DimensionError("masked_correlation: dimension mismatch");
  }
  DenseVector y(d.cols());
  for (std::size_t j = 0; j < d.cols(); ++j) {
    const double* dj = d.col(j);
    double acc = 0.0;
    for (const std::size_t i : mask.indices) acc += dj[i] * x[i];
    y[j] = acc * mask.scale;
  }
  return y;
}

double frobenius_norm(const DenseMatrix& a) {
  double acc = 0.0;
  const double* p = a.data();
  const std::size_t n = a.rows() * a.cols();
  for (std::size_t i = 0; i < n; ++i) acc += p[i] * p[i];
  return std::sqrt(acc);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  const std::size_t n = a.rows() * a.cols();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

}  // namespace somf
