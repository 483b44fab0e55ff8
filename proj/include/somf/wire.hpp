#pragma once

// Little-endian primitives shared by the on-disk formats. Byte order is
// pinned by shifting, not by memcpy, so files travel between hosts.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace somf::wire {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline bool get_u64(std::istream& in, std::uint64_t& v) {
  char bytes[8];
  if (!in.read(bytes, 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return true;
}

inline void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline bool get_f64(std::istream& in, double& v) {
  std::uint64_t bits;
  if (!get_u64(in, bits)) return false;
  v = std::bit_cast<double>(bits);
  return true;
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
  char bytes[4];
  if (!in.read(bytes, 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return true;
}

}  // namespace somf::wire
