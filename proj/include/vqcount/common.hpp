#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqcount {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

// Fixed-format double for CSV output; round-trips exactly and is
// byte-stable across runs of the same build.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// ---- little-endian binary I/O -------------------------------------------

inline void write_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& os, uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_u64(std::ostream& os, uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_f64(std::ostream& os, double v) {
  uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

inline void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint8_t read_u8(std::istream& is) {
  int c = is.get();
  require(c != EOF, "unexpected end of file");
  return static_cast<uint8_t>(c);
}

inline uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(read_u8(is)) << (8 * i);
  return v;
}

inline uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(read_u8(is)) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is) {
  uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string read_str(std::istream& is) {
  uint32_t n = read_u32(is);
  require(n < (1u << 24), "string length implausible");
  std::string s(n, '\0');
  is.read(s.data(), n);
  require(static_cast<uint32_t>(is.gcount()) == n, "unexpected end of file");
  return s;
}

inline std::ofstream open_out(const std::string& path, bool binary = true) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  require(os.good(), "cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path, bool binary = true) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  require(is.good(), "cannot open for reading: " + path);
  return is;
}

}  // namespace vqcount
