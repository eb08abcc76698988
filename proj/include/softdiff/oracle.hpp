#pragma once

#include "softdiff/gaussian_mixture.hpp"
#include "softdiff/process.hpp"

#include <functional>

namespace softdiff {

/// Largest dimension the dense oracle algebra accepts.
inline constexpr Eigen::Index kOracleMaxDim = 256;

/// Explicit n x n matrix of a LinearOperator.
struct DenseOperator {
  Matrix matrix;

  Eigen::Index dim() const { return matrix.rows(); }
  Matrix apply(const Matrix& x) const { return matrix * x; }
};

DenseOperator to_dense(const LinearOperator& op);

/// Exact law of C x0 + sigma z for x0 ~ gmm.
GaussianMixture pushforward(const GaussianMixture& gmm, const DenseOperator& c, double sigma);

/// Gradient of log gmm_t at x.
Vector analytic_score(const GaussianMixture& gmm_t, const Vector& x);
Tensor analytic_score(const GaussianMixture& gmm_t, const Tensor& x);

/// E[x0 | x_t] for x_t = C x0 + sigma z, x0 ~ gmm0, with per-component
/// Gaussian conditioning mixed by the pushforward responsibilities.
class PosteriorMean {
 public:
  PosteriorMean(const GaussianMixture& gmm0, const DenseOperator& c, double sigma);

  Vector operator()(const Vector& xt) const;
  Matrix columns(const Matrix& xt) const;

  const MixtureEvaluator<double>& marginal() const { return marginal_; }

 private:
  GaussianMixture prior_;
  MixtureEvaluator<double> marginal_;
  /// Sigma_i C^T (C Sigma_i C^T + sigma^2 I)^{-1}
  std::vector<Matrix> gains_;
  std::vector<Vector> observed_means_;
};

Vector posterior_mean(const GaussianMixture& gmm0, const DenseOperator& c, double sigma, const Vector& xt);

using ScoreCandidate = std::function<Vector(const Vector&)>;

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Per-sample values of 1/2|s - grad log q_t|^2 - 1/2|s - grad log q_t(.|x0)|^2.
/// Candidates evaluated with identically seeded `rng` share random numbers.
Vector j1_minus_j2_samples(const GaussianMixture& gmm0, const CorruptionProcess& proc, double t,
                           const ScoreCandidate& score_fn, Eigen::Index num_samples, RandomSource& rng);

McEstimate estimate_J1_minus_J2(const GaussianMixture& gmm0, const CorruptionProcess& proc, double t,
                                const ScoreCandidate& score_fn, Eigen::Index num_samples, RandomSource& rng);

/// Mean and standard error of a sample vector.
McEstimate mean_and_error(const Vector& samples);

}  // namespace softdiff
