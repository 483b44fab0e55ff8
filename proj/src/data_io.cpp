#include "somf/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "somf/errors.hpp"
#include "somf/wire.hpp"

namespace somf {

namespace {

constexpr char kMatrixMagic[9] = "SOMFMAT1";

std::uint64_t file_size_or_throw(const std::string& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path + ": " + ec.message());
  return static_cast<std::uint64_t>(size);
}

}  // namespace

void save_matrix(const std::string& path, const DenseMatrix& m) {
  if (m.empty()) throw ConfigError("save_matrix: refusing to write an empty matrix");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMatrixMagic, 8);
  wire::put_u64(out, m.rows());
  wire::put_u64(out, m.cols());
  const std::size_t count = m.rows() * m.cols();
  for (std::size_t i = 0; i < count; ++i) wire::put_f64(out, m.data()[i]);
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

DenseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint64_t actual_size = file_size_or_throw(path);
  if (actual_size < 24) {
    throw IoError(path + ": truncated header, file is " + std::to_string(actual_size) +
                  " bytes but the header needs 24 (byte offset " +
                  std::to_string(actual_size) + ")");
  }

  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != std::string(kMatrixMagic, 8)) {
    throw IoError(path + ": bad magic at byte offset 0");
  }
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  wire::get_u64(in, rows);
  wire::get_u64(in, cols);
  if (rows == 0 || cols == 0) {
    throw IoError(path + ": zero dimension in header at byte offset 8");
  }

  const std::uint64_t expected_size = 24 + 8 * rows * cols;
  if (actual_size != expected_size) {
    throw IoError(path + ": header claims " + std::to_string(rows) + "x" +
                  std::to_string(cols) + " (" + std::to_string(expected_size) +
                  " bytes) but the file has " + std::to_string(actual_size) +
                  " (byte offset " + std::to_string(std::min(actual_size, expected_size)) +
                  ")");
  }

  DenseMatrix m(rows, cols);
  const std::size_t count = rows * cols;
  for (std::size_t i = 0; i < count; ++i) {
    if (!wire::get_f64(in, m.data()[i])) {
      throw IoError(path + ": short read at byte offset " + std::to_string(24 + 8 * i));
    }
  }
  return m;
}

DenseMatrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      const std::string cell = line.substr(start, comma - start);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw IoError(path + ": line " + std::to_string(line_no) +
                      ": cannot parse '" + cell + "' as a number");
      }
      row.push_back(v);
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path + ": line " + std::to_string(line_no) + ": expected " +
                    std::to_string(rows.front().size()) + " values, got " +
                    std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  DenseMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void save_csv_matrix(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

void save_volume(const std::string& path, const Volume& v) {
  if (v.data.size() != v.height * v.width * v.channels) {
    throw DimensionError("save_volume: data size does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  wire::put_u64(out, v.height);
  wire::put_u64(out, v.width);
  wire::put_u64(out, v.channels);
  for (const double d : v.data) wire::put_f64(out, d);
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

Volume load_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint64_t actual_size = file_size_or_throw(path);
  if (actual_size < 24) {
    throw IoError(path + ": truncated header, file is " + std::to_string(actual_size) +
                  " bytes but the header needs 24 (byte offset " +
                  std::to_string(actual_size) + ")");
  }
  Volume v;
  std::uint64_t h = 0;
  std::uint64_t w = 0;
  std::uint64_t c = 0;
  wire::get_u64(in, h);
  wire::get_u64(in, w);
  wire::get_u64(in, c);
  if (h == 0 || w == 0 || c == 0) {
    throw IoError(path + ": zero dimension in header at byte offset 0");
  }
  const std::uint64_t expected_size = 24 + 8 * h * w * c;
  if (actual_size != expected_size) {
    throw IoError(path + ": header claims " + std::to_string(h) + "x" +
                  std::to_string(w) + "x" + std::to_string(c) + " (" +
                  std::to_string(expected_size) + " bytes) but the file has " +
                  std::to_string(actual_size) + " (byte offset " +
                  std::to_string(std::min(actual_size, expected_size)) + ")");
  }
  v.height = h;
  v.width = w;
  v.channels = c;
  v.data.resize(h * w * c);
  for (double& d : v.data) wire::get_f64(in, d);
  return v;
}

DenseMatrix extract_patches(const Volume& volume, const PatchSpec& spec) {
  if (spec.height == 0 || spec.width == 0 || spec.stride == 0) {
    throw ConfigError("patch height, width and stride must be >= 1");
  }
  if (spec.channels != volume.channels) {
    throw ConfigError("patch channels (" + std::to_string(spec.channels) +
                      ") must match the volume (" + std::to_string(volume.channels) +
                      ")");
  }
  if (spec.height > volume.height || spec.width > volume.width) {
    throw ConfigError("patch does not fit inside the volume");
  }

  const std::size_t n_h = (volume.height - spec.height) / spec.stride + 1;
  const std::size_t n_w = (volume.width - spec.width) / spec.stride + 1;
  const std::size_t dim = spec.height * spec.width * spec.channels;

  DenseMatrix out(dim, n_h * n_w);
  std::size_t col = 0;
  for (std::size_t oh = 0; oh < n_h; ++oh) {
    for (std::size_t ow = 0; ow < n_w; ++ow, ++col) {
      double* dst = out.col(col);
      std::size_t r = 0;
      for (std::size_t ph = 0; ph < spec.height; ++ph) {
        for (std::size_t pw = 0; pw < spec.width; ++pw) {
          for (std::size_t c = 0; c < spec.channels; ++c, ++r) {
            dst[r] = volume.at(oh * spec.stride + ph, ow * spec.stride + pw, c);
          }
        }
      }
    }
  }
  return out;
}

Normalize parse_normalize(const std::string& name) {
  if (name == "none") return Normalize::None;
  if (name == "l2") return Normalize::L2;
  if (name == "center_l2") return Normalize::CenterL2;
  throw ConfigError("normalize must be one of none|l2|center_l2, got '" + name + "'");
}

std::string normalize_name(Normalize mode) {
  switch (mode) {
    case Normalize::None: return "none";
    case Normalize::L2: return "l2";
    case Normalize::CenterL2: return "center_l2";
  }
  return "none";
}

void normalize_samples(DenseMatrix& m, Normalize mode) {
  if (mode == Normalize::None) return;
  const std::size_t p = m.rows();
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double* col = m.col(j);
    if (mode == Normalize::CenterL2) {
      double mean = 0.0;
      for (std::size_t i = 0; i < p; ++i) mean += col[i];
      mean /= static_cast<double>(p);
      for (std::size_t i = 0; i < p; ++i) col[i] -= mean;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < p; ++i) sq += col[i] * col[i];
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t i = 0; i < p; ++i) col[i] *= inv;
    }
  }
}

DenseMatrix synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.p == 0 || spec.n == 0 || spec.k == 0) {
    throw ConfigError("synthetic spec needs p, n, k >= 1");
  }
  if (spec.duplication == 0 || spec.p % spec.duplication != 0) {
    throw ConfigError("duplication must divide p, got p=" + std::to_string(spec.p) +
                      " duplication=" + std::to_string(spec.duplication));
  }
  if (spec.sparsity <= 0.0 || spec.sparsity > 1.0) {
    throw ConfigError("sparsity must be in (0, 1]");
  }
  if (spec.noise < 0.0) throw ConfigError("noise must be >= 0");

  const std::size_t base_p = spec.p / spec.duplication;
  Rng rng(seed);

  DenseMatrix base(base_p, spec.k);
  for (std::size_t j = 0; j < spec.k; ++j) {
    for (std::size_t i = 0; i < base_p; ++i) base(i, j) = rng.normal();
  }
  // Unit columns keep code scales comparable across k.
  for (std::size_t j = 0; j < spec.k; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < base_p; ++i) sq += base(i, j) * base(i, j);
    const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    for (std::size_t i = 0; i < base_p; ++i) base(i, j) *= inv;
  }

  DenseMatrix codes(spec.k, spec.n);
  for (std::size_t j = 0; j < spec.n; ++j) {
    for (std::size_t i = 0; i < spec.k; ++i) {
      if (rng.uniform() < spec.sparsity) codes(i, j) = rng.normal();
    }
  }

  // Stack the base block `duplication` times, then add noise. Row i of the
  // output copies base row i % base_p.
  DenseMatrix x(spec.p, spec.n);
  for (std::size_t j = 0; j < spec.n; ++j) {
    double* xj = x.col(j);
    for (std::size_t l = 0; l < spec.k; ++l) {
      const double clj = codes(l, j);
      if (clj == 0.0) continue;
      const double* bl = base.col(l);
      for (std::size_t i = 0; i < spec.p; ++i) xj[i] += bl[i % base_p] * clj;
    }
    if (spec.noise > 0.0) {
      for (std::size_t i = 0; i < spec.p; ++i) xj[i] += spec.noise * rng.normal();
    }
  }
  return x;
}

}  // namespace somf
