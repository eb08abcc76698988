#pragma once

#include "softdiff/oracle.hpp"
#include "softdiff/objective.hpp"
#include "softdiff/sampler.hpp"

#include <string>
#include <utility>
#include <vector>

namespace softdiff {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, double>> metrics;
  std::string detail;
};

/// Posterior-mean denoiser for a mixture prior under `proc`.
Denoiser oracle_denoiser(const GaussianMixture& gmm0, const CorruptionProcess& proc);

/// Fixed score candidates for the constancy check: the exact marginal
/// score, zero, a damped marginal score, a standard-normal score and a
/// bounded nonlinear field.
std::vector<ScoreCandidate> constancy_candidates(const GaussianMixture& gmm_t);

/// J1 - J2 for every candidate at every t, shared random numbers per t.
/// Passes when every pairwise difference lies within `tolerance` combined
/// standard errors of zero.
SuiteResult verify_constancy(const GaussianMixture& gmm0, const CorruptionProcess& proc,
                            const std::vector<double>& times, Eigen::Index num_samples, std::uint64_t seed,
                            double tolerance = 4.0);

/// Central differences of ssm_loss against backward() on `num_params`
/// random coordinates per architecture, with randomized weights.
SuiteResult verify_gradients(const std::vector<ModelSpec>& specs, const CorruptionProcess& proc,
                             const LossConfig& loss, int num_params, std::uint64_t seed, double tolerance = 1e-4);

/// x + (sigma_t^2 - sigma_prev^2) s + sqrt(sigma_t^2 - sigma_prev^2) eta
/// with s = (x0_hat - x) / sigma_t^2.
Matrix ve_predictor_step(const Matrix& xt, const Matrix& x0_hat, double sigma_t, double sigma_prev,
                         const Matrix& eta);

/// momentum_step with C_t = I against ve_predictor_step over random states;
/// passes only on bitwise equality.
SuiteResult verify_ve_reduction(Eigen::Index dim, Eigen::Index num_states, std::uint64_t seed);

/// momentum_sample with the oracle denoiser on a Gaussian prior; passes
/// when the Gaussian W2 between sample moments and the prior is <= threshold.
SuiteResult verify_oracle_sampler(const GaussianMixture& gaussian, const CorruptionProcess& proc,
                                  Eigen::Index num_samples, int num_steps, std::uint64_t seed,
                                  double threshold = 0.1);

}  // namespace softdiff
