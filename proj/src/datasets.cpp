#include "softdiff/datasets.hpp"

#include <cmath>

namespace softdiff {

Matrix generate_blobs(const BlobSpec& spec, Eigen::Index count, RandomSource& rng) {
  if (spec.height < 1 || spec.width < 1 || spec.max_blobs < 1) throw RangeError("blobs: bad image spec");
  Matrix out(Eigen::Index{spec.height} * spec.width, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const int blobs = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(spec.max_blobs)));
    Vector img = Vector::Zero(out.rows());
    for (int b = 0; b < blobs; ++b) {
      const double cy = rng.uniform(0.0, spec.height - 1.0);
      const double cx = rng.uniform(0.0, spec.width - 1.0);
      const double w = rng.uniform(spec.width_min, spec.width_max);
      const double amp = rng.uniform(0.5, 1.0);
      for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c) {
          const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
          img[r * spec.width + c] += amp * std::exp(-d2 / (2.0 * w * w));
        }
    }
    out.col(j) = img / img.maxCoeff();
  }
  return out;
}

Eigen::Index DatasetSpec::dim() const {
  if (gmm) return gmm->dim();
  return Eigen::Index{blobs->height} * blobs->width;
}

std::vector<std::uint64_t> DatasetSpec::item_shape() const {
  if (gmm) return {static_cast<std::uint64_t>(gmm->dim())};
  return {static_cast<std::uint64_t>(blobs->height), static_cast<std::uint64_t>(blobs->width)};
}

Matrix DatasetSpec::generate(Eigen::Index count, RandomSource& rng) const {
  if (gmm) return gmm->sample(count, rng);
  if (blobs) return generate_blobs(*blobs, count, rng);
  throw ConfigError("dataset: neither a mixture nor a blob generator is configured");
}

Matrix match_moments(const Matrix& x, const Vector& mean, const Matrix& cov) {
  const auto [m, c] = sample_moments<double>(x);
  const Matrix l_target = Eigen::LLT<Matrix>(cov).matrixL();
  const Matrix l_sample = Eigen::LLT<Matrix>(c).matrixL();
  const Matrix map = l_target * l_sample.triangularView<Eigen::Lower>().solve(Matrix::Identity(x.rows(), x.rows()));
  Matrix out = map * (x.colwise() - m);
  out.colwise() += mean;
  return out;
}

}  // namespace softdiff
