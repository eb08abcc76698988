#include "softdiff/sampler.hpp"

#include "softdiff/objective.hpp"

#include <cmath>

namespace softdiff {

namespace {

void check_config(const SamplerConfig& cfg) {
  if (cfg.num_steps < 1) throw RangeError("sampler: num_steps must be positive");
}

}  // namespace

Denoiser model_denoiser(const ScoreModel& model) {
  return [&model](const Matrix& xt, double t) { return denoise(model, xt, t); };
}

TerminalDistribution TerminalDistribution::from_data(const Matrix& data, const CorruptionProcess& proc) {
  if (data.cols() == 0) throw Error("terminal distribution: empty dataset");
  check_dim("terminal distribution", proc.dim(), data.rows());
  const Vector m = data.rowwise().mean();
  return {proc.operator_at(1.0).apply(m), proc.sigma_at(1.0)};
}

Matrix TerminalDistribution::sample(Eigen::Index count, RandomSource& rng) const {
  Matrix x = sigma * rng.normal_matrix(mean.size(), count);
  x.colwise() += mean;
  return x;
}

double grid_time(int k, int num_steps) {
  if (k <= 0) return 0.0;
  if (k >= num_steps) return 1.0;
  return static_cast<double>(k) / num_steps;
}

Matrix naive_sample(const Denoiser& denoiser, const CorruptionProcess& proc, const SamplerConfig& cfg,
                    const TerminalDistribution& p1, Eigen::Index count) {
  check_config(cfg);
  RandomSource rng(cfg.seed);
  Matrix x = p1.sample(count, rng);
  for (int k = cfg.num_steps; k >= 1; --k) {
    const double t = grid_time(k, cfg.num_steps);
    const double prev = grid_time(k - 1, cfg.num_steps);
    const Matrix x0_hat = denoiser(x, t);
    x = proc.operator_at(prev).apply(x0_hat) + proc.sigma_at(prev) * rng.normal_matrix(x.rows(), count);
  }
  return x;
}

Matrix momentum_update(const Matrix& xt, const Matrix& x0_hat, const LinearOperator& c_t,
                       const LinearOperator& c_prev, double sigma_t, double sigma_prev, const Matrix& eta,
                       NoiseEstimate mode) {
  const double var_t = sigma_t * sigma_t;
  const double var_prev = sigma_prev * sigma_prev;
  if (var_t < var_prev)
    throw RangeError("momentum step: sigma decreases from t - dt to t (sigma_t = " + std::to_string(sigma_t) +
                     ", sigma_prev = " + std::to_string(sigma_prev) + ")");
  const Matrix y_t = c_t.apply(x0_hat);
  Matrix eps = y_t - xt;
  if (mode == NoiseEstimate::Normalized) eps /= var_t;
  const Matrix z = (xt - (var_prev - var_t) * eps) + std::sqrt(var_t - var_prev) * eta;
  const Matrix y_prev = c_prev.apply(x0_hat);
  return z + (y_prev - y_t);
}

Matrix momentum_step(const Matrix& xt, double t, double dt, const Denoiser& denoiser, const CorruptionProcess& proc,
                     const Matrix& eta, NoiseEstimate mode) {
  const double prev = t - dt;
  if (prev < -1e-12) throw RangeError("momentum step: t - dt must be non-negative");
  const double prev_t = std::max(0.0, prev);
  const Matrix x0_hat = denoiser(xt, t);
  return momentum_update(xt, x0_hat, proc.operator_at(t), proc.operator_at(prev_t), proc.sigma_at(t),
                         proc.sigma_at(prev_t), eta, mode);
}

Matrix momentum_step(const Matrix& xt, double t, double dt, const Denoiser& denoiser, const CorruptionProcess& proc,
                     RandomSource& rng, NoiseEstimate mode) {
  return momentum_step(xt, t, dt, denoiser, proc, rng.normal_matrix(xt.rows(), xt.cols()), mode);
}

Matrix momentum_sample(const Denoiser& denoiser, const CorruptionProcess& proc, const SamplerConfig& cfg,
                       const TerminalDistribution& p1, Eigen::Index count) {
  check_config(cfg);
  RandomSource rng(cfg.seed);
  Matrix x = p1.sample(count, rng);
  for (int k = cfg.num_steps; k >= 1; --k) {
    const double t = grid_time(k, cfg.num_steps);
    const double prev = grid_time(k - 1, cfg.num_steps);
    const Matrix eta = rng.normal_matrix(x.rows(), count);
    const Matrix x0_hat = denoiser(x, t);
    x = momentum_update(x, x0_hat, proc.operator_at(t), proc.operator_at(prev), proc.sigma_at(t),
                        proc.sigma_at(prev), eta, cfg.mode);
  }
  return x;
}

}  // namespace softdiff
