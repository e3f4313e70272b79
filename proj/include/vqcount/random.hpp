#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "vqcount/common.hpp"

namespace vqcount {

// MurmurHash64A. Seeded 64-bit avalanche hash; used for CBF addressing and
// for deriving named seed substreams from the root seed.
inline uint64_t murmur64(const void* key, size_t len, uint64_t seed) {
  const uint64_t m = 0xc6a4a7935bd1e995ull;
  const int r = 47;
  uint64_t h = seed ^ (len * m);

  const unsigned char* data = static_cast<const unsigned char*>(key);
  const unsigned char* end = data + (len / 8) * 8;
  while (data != end) {
    uint64_t k = 0;
    for (int i = 0; i < 8; ++i) k |= static_cast<uint64_t>(data[i]) << (8 * i);
    data += 8;
    k *= m;
    k ^= k >> r;
    k *= m;
    h ^= k;
    h *= m;
  }

  size_t tail = len & 7;
  for (size_t i = tail; i > 0; --i) h ^= static_cast<uint64_t>(data[i - 1]) << (8 * (i - 1));
  if (tail) h *= m;

  h ^= h >> r;
  h *= m;
  h ^= h >> r;
  return h;
}

inline uint64_t hash_str(std::string_view s, uint64_t seed) {
  return murmur64(s.data(), s.size(), seed);
}

// All randomness flows from one root seed through named substreams, so
// changing e.g. the eval rollout count never perturbs dataset generation.
inline uint64_t substream_seed(uint64_t root, std::string_view name) {
  return hash_str(name, root ^ 0x9e3779b97f4a7c15ull);
}

class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : engine_(seed) {}
  RandomStream(uint64_t root, std::string_view name) : engine_(substream_seed(root, name)) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // in [0, n)
  int uniform_int(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }
  uint64_t next_u64() { return engine_(); }

  Mat uniform_mat(int rows, int cols, double lo, double hi) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }
  Mat normal_mat(int rows, int cols, double mean = 0.0, double stddev = 1.0) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal(mean, stddev);
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vqcount
