#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "somf/errors.hpp"
#include "somf/regularizers.hpp"
#include "somf/rng.hpp"

using namespace somf;

namespace {

DenseVector random_vector(std::size_t n, Rng& rng, double scale) {
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

double l2sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("soft threshold on hand values") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);
  CHECK(soft_threshold(2.5, 0.0) == 2.5);
}

TEST_CASE("penalty value on hand vectors") {
  const std::vector<double> a = {1.0, -2.0, 0.0};
  PenaltyParams p;
  p.lambda = 2.0;
  p.l1_ratio = 1.0;
  CHECK(penalty_value(a, p) == doctest::Approx(6.0));  // 2 * (1 + 2)
  p.l1_ratio = 0.0;
  CHECK(penalty_value(a, p) == doctest::Approx(10.0));  // 2 * (1 + 4)
  p.l1_ratio = 0.5;
  CHECK(penalty_value(a, p) == doctest::Approx(8.0));
}

TEST_CASE("penalty parameters are validated") {
  const std::vector<double> a = {1.0};
  PenaltyParams p;
  p.lambda = -0.1;
  CHECK_THROWS_AS(penalty_value(a, p), ConfigError);
  p.lambda = 0.1;
  p.l1_ratio = 1.5;
  CHECK_THROWS_AS(penalty_value(a, p), ConfigError);
}

TEST_CASE("ball norm on hand vectors") {
  const std::vector<double> d = {3.0, -4.0};
  BallParams b;
  b.mu = 0.0;
  CHECK(ball_norm(d, b) == doctest::Approx(25.0));
  b.mu = 1.0;
  CHECK(ball_norm(d, b) == doctest::Approx(7.0));
  b.mu = 0.5;
  CHECK(ball_norm(d, b) == doctest::Approx(16.0));
}

TEST_CASE("feasible points are returned bitwise unchanged") {
  Rng rng(31);
  BallParams b;
  b.mu = 0.4;
  const DenseVector d = random_vector(8, rng, 0.05);
  REQUIRE(ball_norm(d.span(), b) <= 1.0);
  const DenseVector out = project_ball(d.span(), b, 1.0);
  for (std::size_t i = 0; i < 8; ++i) CHECK(out[i] == d[i]);
}

TEST_CASE("euclidean projection is an exact rescale") {
  Rng rng(32);
  BallParams b;
  b.mu = 0.0;
  const DenseVector d = random_vector(10, rng, 3.0);
  const double radius = 1.0;
  const DenseVector out = project_ball(d.span(), b, radius);
  CHECK(l2sq(out.span()) == doctest::Approx(radius).epsilon(1e-12));
  // Direction is preserved.
  const double scale = out[0] / d[0];
  for (std::size_t i = 1; i < 10; ++i) CHECK(out[i] == doctest::Approx(scale * d[i]).epsilon(1e-12));
}

TEST_CASE("l1 projection matches hand example") {
  // Projecting (2, 1) onto ||.||_1 <= 1 gives (1, 0).
  const std::vector<double> d = {2.0, 1.0};
  BallParams b;
  b.mu = 1.0;
  const DenseVector out = project_ball(d, b, 1.0);
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("l1 projection keeps signs and hits the boundary") {
  Rng rng(33);
  BallParams b;
  b.mu = 1.0;
  const DenseVector d = random_vector(12, rng, 2.0);
  const DenseVector out = project_ball(d.span(), b, 1.0);
  double l1 = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    l1 += std::abs(out[i]);
    CHECK(out[i] * d[i] >= 0.0);
  }
  CHECK(l1 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("projection matches the grid oracle across mixes") {
  Rng rng(34);
  for (double mu : {0.0, 0.3, 0.7, 1.0}) {
    BallParams b;
    b.mu = mu;
    for (int trial = 0; trial < 20; ++trial) {
      const DenseVector d = random_vector(9, rng, 1.5);
      const double radius = 0.25 + 0.75 * rng.uniform();
      const DenseVector got = project_ball(d.span(), b, radius);
      const DenseVector want = oracle::grid_projection(d.span(), b, radius);
      for (std::size_t i = 0; i < 9; ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-6));
      }
      CHECK(ball_norm(got.span(), b) <= radius + 1e-9);
    }
  }
}

TEST_CASE("projection is idempotent") {
  Rng rng(35);
  for (double mu : {0.0, 0.5, 1.0}) {
    BallParams b;
    b.mu = mu;
    const DenseVector d = random_vector(7, rng, 4.0);
    const DenseVector once = project_ball(d.span(), b, 1.0);
    const DenseVector twice = project_ball(once.span(), b, 1.0);
    for (std::size_t i = 0; i < 7; ++i) CHECK(twice[i] == once[i]);
  }
}

TEST_CASE("projection is nonexpansive") {
  Rng rng(36);
  for (double mu : {0.0, 0.3, 1.0}) {
    BallParams b;
    b.mu = mu;
    for (int trial = 0; trial < 10; ++trial) {
      const DenseVector x = random_vector(6, rng, 2.0);
      const DenseVector y = random_vector(6, rng, 2.0);
      const DenseVector px = project_ball(x.span(), b, 1.0);
      const DenseVector py = project_ball(y.span(), b, 1.0);
      double dxy = 0.0, dpxy = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        dxy += (x[i] - y[i]) * (x[i] - y[i]);
        dpxy += (px[i] - py[i]) * (px[i] - py[i]);
      }
      CHECK(dpxy <= dxy + 1e-9);
    }
  }
}

TEST_CASE("projection handles tiny radii") {
  Rng rng(37);
  BallParams b;
  b.mu = 0.6;
  const DenseVector d = random_vector(5, rng, 1.0);
  const double radius = 1e-8;
  const DenseVector out = project_ball(d.span(), b, radius);
  CHECK(ball_norm(out.span(), b) <= radius * (1.0 + 1e-9) + 1e-15);
}

TEST_CASE("projection rejects bad parameters") {
  const std::vector<double> d = {1.0, 2.0};
  BallParams b;
  b.mu = -0.1;
  CHECK_THROWS_AS(project_ball(d, b, 1.0), ConfigError);
  b.mu = 0.5;
  CHECK_THROWS_AS(project_ball(d, b, 0.0), ConfigError);
  CHECK_THROWS_AS(project_ball(d, b, -1.0), ConfigError);
}
