#pragma once

// On-disk formats and dataset preparation.
//
// Matrix container: 8-byte magic "SOMFMAT1", then rows and cols as
// little-endian u64, then the column-major float64 payload. File size is
// exactly 24 + 8 * rows * cols bytes; readers reject anything else and name
// the byte offset of the problem.
//
// Volume container (patch sources): three little-endian u64 (height, width,
// channels) followed by float64 data in row-major order, channel fastest,
// i.e. element (h, w, c) lives at index (h * width + w) * channels + c.

#include <cstdint>
#include <string>
#include <vector>

#include "somf/matrix.hpp"
#include "somf/rng.hpp"

namespace somf {

void save_matrix(const std::string& path, const DenseMatrix& m);
DenseMatrix load_matrix(const std::string& path);

// Header-less comma-separated values, one matrix row per line.
DenseMatrix load_csv_matrix(const std::string& path);
void save_csv_matrix(const std::string& path, const DenseMatrix& m);

struct Volume {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> data;  // (h * width + w) * channels + c

  double at(std::size_t h, std::size_t w, std::size_t c) const {
    return data[(h * width + w) * channels + c];
  }
};

void save_volume(const std::string& path, const Volume& v);
Volume load_volume(const std::string& path);

struct PatchSpec {
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t channels = 1;  // must match the volume
  std::size_t stride = 1;
};

// Every patch origin on the stride grid, origins in row-major order. Each
// output column is one vectorized patch: pixels row-major, channel fastest.
// Output is floor((H - height) / stride + 1) * floor((W - width) / stride + 1)
// columns of height * width * channels rows.
DenseMatrix extract_patches(const Volume& volume, const PatchSpec& spec);

enum class Normalize { None, L2, CenterL2 };

Normalize parse_normalize(const std::string& name);
std::string normalize_name(Normalize mode);

// Column-wise: optional centering, then scaling to unit euclidean norm.
// Columns that end up at zero norm are left as zero vectors.
void normalize_samples(DenseMatrix& m, Normalize mode);

struct SyntheticSpec {
  std::size_t p = 256;          // feature count, must be divisible by duplication
  std::size_t n = 512;          // samples
  std::size_t k = 16;           // generating dictionary size
  std::size_t duplication = 1;  // each base feature row repeated this many times
  double sparsity = 0.25;       // expected fraction of active codes
  double noise = 0.05;          // additive gaussian noise level
};

// Draws a generating dictionary on p/duplication base features, stacks it
// `duplication` times so blocks of rows are exact copies, and emits
// X = D A + noise. Redundant rows make coordinate subsampling nearly free.
DenseMatrix synthesize(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace somf
