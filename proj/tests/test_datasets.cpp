#include "doctest.h"

#include "softdiff/benchmarks.hpp"
#include "softdiff/datasets.hpp"

using namespace softdiff;

TEST_CASE("blob images lie in [0, 1] with a unit peak") {
  RandomSource rng(1);
  const Matrix x = generate_blobs(BlobSpec{}, 200, rng);
  CHECK(x.rows() == 64);
  CHECK(x.minCoeff() >= 0.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) CHECK(x.col(j).maxCoeff() == 1.0);
  RandomSource a(2), b(2);
  CHECK(generate_blobs(BlobSpec{}, 10, a) == generate_blobs(BlobSpec{}, 10, b));
  BlobSpec bad;
  bad.max_blobs = 0;
  CHECK_THROWS_AS(generate_blobs(bad, 1, a), RangeError);
}

TEST_CASE("moment matching is exact") {
  RandomSource rng(3);
  const GaussianMixture g = benchmarks::gaussian_2d();
  const Matrix x = match_moments(rng.normal_matrix(2, 500), g.means[0], g.covs[0]);
  const auto [m, c] = sample_moments<double>(x);
  CHECK((m - g.means[0]).norm() < 1e-12);
  CHECK((c - g.covs[0]).norm() < 1e-12);
}

TEST_CASE("dataset spec shapes") {
  DatasetSpec mix;
  mix.gmm = benchmarks::mixture_2d();
  CHECK(mix.dim() == 2);
  CHECK(mix.tag() == "gmm");
  CHECK(mix.item_shape() == std::vector<std::uint64_t>{2});
  DatasetSpec blobs;
  blobs.blobs = BlobSpec{4, 6, 2, 0.8, 2.0};
  CHECK(blobs.dim() == 24);
  CHECK(blobs.item_shape() == std::vector<std::uint64_t>{4, 6});
  RandomSource rng(4);
  CHECK(blobs.generate(3, rng).rows() == 24);
  CHECK_THROWS_AS(DatasetSpec{}.generate(1, rng), ConfigError);
}

TEST_CASE("benchmark mixtures are valid") {
  CHECK_NOTHROW(benchmarks::gaussian_2d().validate());
  CHECK_NOTHROW(benchmarks::mixture_2d().validate());
  CHECK(benchmarks::mixture_2d().size() == 4);
  const CorruptionProcess p = benchmarks::collapsing_blur_process();
  CHECK(p.sigma_at(1.0) == doctest::Approx(0.1));
  CHECK(p.level_at(1.0) == 6.0);
}
