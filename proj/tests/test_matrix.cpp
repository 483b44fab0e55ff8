#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "somf/errors.hpp"
#include "somf/matrix.hpp"
#include "somf/rng.hpp"

using namespace somf;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace

TEST_CASE("matmul identity is exact") {
  Rng rng(11);
  const DenseMatrix a = random_matrix(7, 5, rng);
  const DenseMatrix out = matmul(a, DenseMatrix::identity(5));
  CHECK(max_abs_diff(a, out) == 0.0);
}

TEST_CASE("matmul of diagonal blocks") {
  DenseMatrix a(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 3.0;
  DenseMatrix b(2, 2);
  b(0, 0) = 5.0;
  b(1, 1) = 7.0;
  const DenseMatrix c = matmul(a, b);
  CHECK(c(0, 0) == 10.0);
  CHECK(c(1, 1) == 21.0);
  CHECK(c(0, 1) == 0.0);
  CHECK(c(1, 0) == 0.0);
}

TEST_CASE("matmul matches the naive triple loop") {
  Rng rng(12);
  const DenseMatrix a = random_matrix(9, 6, rng);
  const DenseMatrix b = random_matrix(6, 4, rng);
  CHECK(max_abs_diff(matmul(a, b), oracle::naive_matmul(a, b)) < 1e-13);
}

TEST_CASE("matmul is associative within float tolerance") {
  Rng rng(13);
  const DenseMatrix a = random_matrix(5, 6, rng);
  const DenseMatrix b = random_matrix(6, 7, rng);
  const DenseMatrix c = random_matrix(7, 3, rng);
  CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes") {
  Rng rng(14);
  const DenseMatrix a = random_matrix(3, 4, rng);
  const DenseMatrix b = random_matrix(3, 4, rng);
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("transpose round trips") {
  Rng rng(15);
  const DenseMatrix a = random_matrix(6, 3, rng);
  CHECK(max_abs_diff(transpose(transpose(a)), a) == 0.0);
}

TEST_CASE("transpose_apply matches explicit transpose multiply") {
  Rng rng(16);
  const DenseMatrix a = random_matrix(8, 5, rng);
  DenseMatrix x(8, 1);
  for (std::size_t i = 0; i < 8; ++i) x(i, 0) = rng.normal();
  const DenseVector y = transpose_apply(a, x.col_span(0));
  const DenseMatrix ref = oracle::naive_matmul(transpose(a), x);
  for (std::size_t j = 0; j < 5; ++j) CHECK(y[j] == doctest::Approx(ref(j, 0)).epsilon(1e-13));
}

TEST_CASE("masked_gram with the full mask is the plain gram") {
  Rng rng(17);
  const DenseMatrix d = random_matrix(10, 4, rng);
  const Mask full = Mask::full_mask(10);
  const DenseMatrix g = masked_gram(d, full);
  const DenseMatrix ref = oracle::naive_matmul(transpose(d), d);
  CHECK(max_abs_diff(g, ref) < 1e-13);
}

TEST_CASE("masked_gram of an empty mask is zero") {
  Rng rng(18);
  const DenseMatrix d = random_matrix(6, 3, rng);
  Mask empty;
  empty.dim = 6;
  empty.scale = 4.0;
  const DenseMatrix g = masked_gram(d, empty);
  CHECK(frobenius_norm(g) == 0.0);
}

TEST_CASE("masked_gram matches the dense diagonal oracle") {
  Rng rng(19);
  const DenseMatrix d = random_matrix(12, 5, rng);
  Mask m;
  m.dim = 12;
  m.scale = 2.0;
  m.indices = {0, 3, 4, 7, 11};
  CHECK(max_abs_diff(masked_gram(d, m), oracle::dense_masked_gram(d, m)) < 1e-13);
}

TEST_CASE("masked_gram is exactly symmetric") {
  Rng rng(20);
  const DenseMatrix d = random_matrix(30, 7, rng);
  Mask m;
  m.dim = 30;
  m.scale = 3.0;
  for (std::size_t i = 0; i < 30; i += 2) m.indices.push_back(i);
  const DenseMatrix g = masked_gram(d, m);
  for (std::size_t a = 0; a < 7; ++a) {
    for (std::size_t b = 0; b < 7; ++b) CHECK(g(a, b) == g(b, a));
  }
}

TEST_CASE("masked_correlation matches the dense oracle and scales linearly") {
  Rng rng(21);
  const DenseMatrix d = random_matrix(9, 4, rng);
  DenseVector x(9);
  for (std::size_t i = 0; i < 9; ++i) x[i] = rng.normal();
  Mask m;
  m.dim = 9;
  m.scale = 2.0;
  m.indices = {1, 2, 5, 8};

  const DenseVector got = masked_correlation(d, x, m);
  const DenseVector want = oracle::dense_masked_correlation(d, x, m);
  for (std::size_t j = 0; j < 4; ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-13));

  Mask doubled = m;
  doubled.scale = 4.0;
  const DenseVector twice = masked_correlation(d, x, doubled);
  for (std::size_t j = 0; j < 4; ++j) CHECK(twice[j] == doctest::Approx(2.0 * got[j]).epsilon(1e-13));
}

TEST_CASE("matrix constructor rejects empty shapes") {
  CHECK_THROWS_AS(DenseMatrix(0, 3), DimensionError);
  CHECK_THROWS_AS(DenseMatrix(3, 0), DimensionError);
}

TEST_CASE("repeated products are bit-identical") {
  Rng rng(22);
  const DenseMatrix a = random_matrix(20, 15, rng);
  const DenseMatrix b = random_matrix(15, 10, rng);
  const DenseMatrix c1 = matmul(a, b);
  const DenseMatrix c2 = matmul(a, b);
  CHECK(max_abs_diff(c1, c2) == 0.0);
}
