#include "somf/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "somf/errors.hpp"

namespace somf {

namespace {

constexpr double kMultiplierTol = 1e-12;

void check_params(const PenaltyParams& p) {
  if (p.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (p.l1_ratio < 0.0 || p.l1_ratio > 1.0) throw ConfigError("code_l1_ratio must be in [0, 1]");
}

void check_params(const BallParams& b) {
  if (b.mu < 0.0 || b.mu > 1.0) throw ConfigError("dict_l1_ratio must be in [0, 1]");
}

// Shrink-and-scale point for multiplier theta:
//   v_i = soft(d_i, theta * mu) / (1 + 2 * theta * (1 - mu))
DenseVector multiplier_point(std::span<const double> d, const BallParams& b, double theta) {
  DenseVector v(d.size());
  const double denom = 1.0 + 2.0 * theta * (1.0 - b.mu);
  for (std::size_t i = 0; i < d.size(); ++i) {
    v[i] = soft_threshold(d[i], theta * b.mu) / denom;
  }
  return v;
}

// Exact l1-ball projection via the sorted threshold (no multiplier search).
DenseVector project_l1(std::span<const double> d, double radius) {
  std::vector<double> mags(d.begin(), d.end());
  for (double& m : mags) m = std::abs(m);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumsum += mags[j];
    const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
    if (mags[j] - candidate > 0.0) {
      theta = candidate;
    } else {
      break;
    }
  }
  theta = std::max(theta, 0.0);
  DenseVector v(d.size());
  const auto fill = [&] {
    for (std::size_t i = 0; i < d.size(); ++i) v[i] = soft_threshold(d[i], theta);
  };
  fill();
  // Rounding in theta can leave the point an ulp outside; nudge until the
  // result re-projects to itself.
  BallParams l1ball;
  l1ball.mu = 1.0;
  while (ball_norm(v.span(), l1ball) > radius) {
    theta = std::nextafter(theta, std::numeric_limits<double>::infinity());
    fill();
  }
  return v;
}

}  // namespace

double soft_threshold(double x, double threshold) {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

double penalty_value(std::span<const double> a, const PenaltyParams& p) {
  check_params(p);
  double l1 = 0.0;
  double sq = 0.0;
  for (double v : a) {
    l1 += std::abs(v);
    sq += v * v;
  }
  return p.lambda * ((1.0 - p.l1_ratio) * sq + p.l1_ratio * l1);
}

double ball_norm(std::span<const double> d, const BallParams& b) {
  check_params(b);
  double l1 = 0.0;
  double sq = 0.0;
  for (double v : d) {
    l1 += std::abs(v);
    sq += v * v;
  }
  return b.mu * l1 + (1.0 - b.mu) * sq;
}

DenseVector project_ball(std::span<const double> d, const BallParams& b, double radius) {
  check_params(b);
  if (radius <= 0.0) {
    throw ConfigError("projection radius must be > 0, got " + std::to_string(radius));
  }
  if (ball_norm(d, b) <= radius) {
    DenseVector v(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) v[i] = d[i];
    return v;
  }

  if (b.mu == 0.0) {
    // ||v||_2^2 = radius on the boundary. Same ulp nudge as project_l1 so
    // the output is always feasible and the projection idempotent.
    double scale = std::sqrt(radius / squared_norm(d));
    DenseVector v(d.size());
    const auto fill = [&] {
      for (std::size_t i = 0; i < d.size(); ++i) v[i] = d[i] * scale;
    };
    fill();
    while (ball_norm(v.span(), b) > radius) {
      scale = std::nextafter(scale, 0.0);
      fill();
    }
    return v;
  }
  if (b.mu == 1.0) return project_l1(d, radius);

  // General case: the norm of the multiplier point decreases monotonically
  // in theta, so bisect. At theta = max|d_i| / mu the point is zero, which
  // brackets the root from above.
  double max_abs = 0.0;
  double sq = 0.0;
  for (double v : d) {
    max_abs = std::max(max_abs, std::abs(v));
    sq += v * v;
  }
  double lo = 0.0;
  double hi = max_abs / b.mu + 2.0 * (1.0 - b.mu) * std::sqrt(sq);
  while (ball_norm(multiplier_point(d, b, hi), b) > radius) hi *= 2.0;
  while (hi - lo > kMultiplierTol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (ball_norm(multiplier_point(d, b, mid), b) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // hi side of the bracket: guaranteed feasible.
  return multiplier_point(d, b, hi);
}

}  // namespace somf
