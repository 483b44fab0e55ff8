#pragma once

#include <cstddef>
#include <vector>

namespace somf {

// Diagonal 0/scale selection operator on feature coordinates. Applying the
// mask to a vector keeps the listed coordinates, multiplied by `scale`, and
// zeroes the rest. With inclusion probability 1/r and scale = r the masked
// vector is an unbiased estimate of the original.
struct Mask {
  std::size_t dim = 0;
  std::vector<std::size_t> indices;  // strictly ascending, all < dim
  double scale = 1.0;

  bool full() const { return indices.size() == dim; }

  // Identity mask: every coordinate kept, scale 1.
  static Mask full_mask(std::size_t dim) {
    Mask m;
    m.dim = dim;
    m.scale = 1.0;
    m.indices.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) m.indices[i] = i;
    return m;
  }

  // Ascending coordinates not present in this mask.
  std::vector<std::size_t> complement() const {
    std::vector<std::size_t> out;
    out.reserve(dim - indices.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      if (next < indices.size() && indices[next] == i) {
        ++next;
      } else {
        out.push_back(i);
      }
    }
    return out;
  }
};

}  // namespace somf
