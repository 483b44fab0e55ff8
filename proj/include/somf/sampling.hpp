#pragma once

// Sample scheduling and coordinate subsampling.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "somf/mask.hpp"
#include "somf/rng.hpp"

namespace somf {

// Bernoulli(1/reduction) inclusion per coordinate, scale = reduction, so the
// masked identity has expectation I. reduction == 1 short-circuits to the
// full mask without consuming the generator.
Mask draw_mask(std::size_t dim, double reduction, Rng& rng);

// Cycles through column indices of a sample matrix, reshuffling uniformly at
// every epoch boundary. Draws are deterministic given the constructing Rng.
class SampleStream {
 public:
  SampleStream() = default;
  SampleStream(std::size_t n_samples, Rng rng);

  std::size_t next();

  std::size_t n_samples() const { return order_.size(); }
  std::uint64_t epoch() const { return epoch_; }

  // Checkpoint access. The stream is fully described by its permutation,
  // cursor, epoch counter and generator state.
  const std::vector<std::size_t>& order() const { return order_; }
  std::size_t cursor() const { return cursor_; }
  const Rng& rng() const { return rng_; }
  static SampleStream restore(std::vector<std::size_t> order, std::size_t cursor,
                              std::uint64_t epoch, Rng rng);

 private:
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
  Rng rng_;
};

}  // namespace somf
