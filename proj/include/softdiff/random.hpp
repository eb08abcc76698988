#pragma once

#include "softdiff/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace softdiff {

/// Seeded source of uniform and Gaussian draws. Single-owner; derive
/// independent streams with `fork` rather than sharing one instance.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double normal() { return normal_(engine_); }

  Vector normal_vector(Eigen::Index n) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  /// Columns are independent standard normal vectors.
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal();
    return z;
  }

  /// Deterministic child stream keyed by a label.
  RandomSource fork(std::string_view label) const { return RandomSource(mix(seed_, label)); }
  RandomSource fork(std::uint64_t k) const { return RandomSource(splitmix(seed_ ^ splitmix(k + 0x9e37))); }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t mix(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return splitmix(seed ^ h);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace softdiff
