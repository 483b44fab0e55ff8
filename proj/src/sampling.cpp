#include "somf/sampling.hpp"

#include <string>

#include "somf/errors.hpp"

namespace somf {

Mask draw_mask(std::size_t dim, double reduction, Rng& rng) {
  if (reduction < 1.0) {
    throw ConfigError("reduction must be >= 1, got " + std::to_string(reduction));
  }
  if (reduction == 1.0) return Mask::full_mask(dim);

  Mask m;
  m.dim = dim;
  m.scale = reduction;
  const double keep = 1.0 / reduction;
  for (std::size_t i = 0; i < dim; ++i) {
    if (rng.uniform() < keep) m.indices.push_back(i);
  }
  return m;
}

SampleStream::SampleStream(std::size_t n_samples, Rng rng) : rng_(rng) {
  if (n_samples == 0) throw ConfigError("sample stream needs at least one sample");
  order_.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order_[i] = i;
  rng_.shuffle(order_);
}

std::size_t SampleStream::next() {
  const std::size_t idx = order_[cursor_++];
  if (cursor_ == order_.size()) {
    cursor_ = 0;
    ++epoch_;
    rng_.shuffle(order_);
  }
  return idx;
}

SampleStream SampleStream::restore(std::vector<std::size_t> order, std::size_t cursor,
                                   std::uint64_t epoch, Rng rng) {
  SampleStream s;
  s.order_ = std::move(order);
  s.cursor_ = cursor;
  s.epoch_ = epoch;
  s.rng_ = rng;
  return s;
}

}  // namespace somf
