#pragma once

// Dense double-precision matrices and the handful of kernels the learners
// are built from. Everything is scalar code with a fixed accumulation order
// (column by column, row index ascending), so repeated runs of one binary
// produce bit-identical results. No BLAS backend on purpose.

#include <cstddef>
#include <span>
#include <vector>

#include "somf/mask.hpp"

namespace somf {

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim) : data_(dim, 0.0) {}
  DenseVector(std::initializer_list<double> init) : data_(init) {}

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<const double> span() const { return {data_.data(), data_.size()}; }
  operator std::span<const double>() const { return span(); }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

 private:
  std::vector<double> data_;
};

// Column-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }
  std::span<const double> col_span(std::size_t j) const { return {col(j), rows_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }
  bool all_finite() const;

  static DenseMatrix identity(std::size_t n);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Accumulates over the inner index in ascending order, writing
// one output column at a time.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

// y = A^T x, accumulated over rows in ascending order.
DenseVector transpose_apply(const DenseMatrix& a, std::span<const double> x);

// D^T M D for a diagonal selection mask M. Touches only masked rows; the
// result is symmetrized exactly (averaged with its transpose) so downstream
// solvers can rely on G == G^T bit for bit.
DenseMatrix masked_gram(const DenseMatrix& d, const Mask& mask);

// D^T M x, touching only masked rows.
DenseVector masked_correlation(const DenseMatrix& d, std::span<const double> x,
                               const Mask& mask);

double frobenius_norm(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> x);

}  // namespace somf
