#pragma once

#include "softdiff/gaussian_mixture.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace softdiff {

/// 8x8-style procedural images: a sum of 1..max_blobs isotropic Gaussian
/// bumps, rescaled so the brightest pixel is 1.
struct BlobSpec {
  int height = 8;
  int width = 8;
  int max_blobs = 3;
  double width_min = 0.8;
  double width_max = 2.0;
};

Matrix generate_blobs(const BlobSpec& spec, Eigen::Index count, RandomSource& rng);

struct DatasetSpec {
  std::optional<GaussianMixture> gmm;
  std::optional<BlobSpec> blobs;
  Eigen::Index num_train = 4096;
  Eigen::Index num_holdout = 4096;

  std::string tag() const { return gmm ? "gmm" : "blobs"; }
  Eigen::Index dim() const;
  /// Per-item shape used when writing tensors.
  std::vector<std::uint64_t> item_shape() const;
  Matrix generate(Eigen::Index count, RandomSource& rng) const;
};

/// Rescales columns so their sample mean and covariance equal the given ones exactly.
Matrix match_moments(const Matrix& x, const Vector& mean, const Matrix& cov);

}  // namespace softdiff
