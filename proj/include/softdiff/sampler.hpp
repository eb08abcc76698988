#pragma once

#include "softdiff/model.hpp"
#include "softdiff/process.hpp"

#include <functional>

namespace softdiff {

enum class NoiseEstimate {
  /// Noise estimate divided by sigma_t^2, i.e. treated as a score.
  Normalized,
  /// Noise estimate used unscaled.
  Literal,
};

struct SamplerConfig {
  int num_steps = 64;
  NoiseEstimate mode = NoiseEstimate::Normalized;
  std::uint64_t seed = 0;

  double dt() const { return 1.0 / num_steps; }
};

/// Clean-image predictor x0_hat(x_t, t), applied to columns.
using Denoiser = std::function<Matrix(const Matrix& xt, double t)>;

Denoiser model_denoiser(const ScoreModel& model);

/// x_1 = m1 + sigma_1 z.
struct TerminalDistribution {
  Vector mean;
  double sigma = 0.0;

  /// Dataset mean pushed through C_1, with sigma_1 from the process.
  static TerminalDistribution from_data(const Matrix& data, const CorruptionProcess& proc);
  Matrix sample(Eigen::Index count, RandomSource& rng) const;
};

/// Grid time of step k counted down from t = 1.
double grid_time(int k, int num_steps);

/// Re-corrupts the clean prediction to the next level at every step.
Matrix naive_sample(const Denoiser& denoiser, const CorruptionProcess& proc, const SamplerConfig& cfg,
                    const TerminalDistribution& p1, Eigen::Index count);

/// Explicit noise for a single step; `eta` holds standard normal columns.
Matrix momentum_step(const Matrix& xt, double t, double dt, const Denoiser& denoiser, const CorruptionProcess& proc,
                     const Matrix& eta, NoiseEstimate mode);
Matrix momentum_step(const Matrix& xt, double t, double dt, const Denoiser& denoiser, const CorruptionProcess& proc,
                     RandomSource& rng, NoiseEstimate mode);

/// Momentum step from precomputed quantities. Operators are passed
/// directly so the update can be checked in isolation.
Matrix momentum_update(const Matrix& xt, const Matrix& x0_hat, const LinearOperator& c_t,
                       const LinearOperator& c_prev, double sigma_t, double sigma_prev, const Matrix& eta,
                       NoiseEstimate mode);

Matrix momentum_sample(const Denoiser& denoiser, const CorruptionProcess& proc, const SamplerConfig& cfg,
                       const TerminalDistribution& p1, Eigen::Index count);

}  // namespace softdiff
