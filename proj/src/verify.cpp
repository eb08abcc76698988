#include "softdiff/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace softdiff {

Denoiser oracle_denoiser(const GaussianMixture& gmm0, const CorruptionProcess& proc) {
  return [gmm0, proc](const Matrix& xt, double t) {
    return PosteriorMean(gmm0, to_dense(proc.operator_at(t)), proc.sigma_at(t)).columns(xt);
  };
}

std::vector<ScoreCandidate> constancy_candidates(const GaussianMixture& gmm_t) {
  auto ev = std::make_shared<MixtureEvaluator<double>>(gmm_t);
  return {
      [ev](const Vector& x) { return ev->score(x); },
      [](const Vector& x) { return Vector(Vector::Zero(x.size())); },
      [ev](const Vector& x) { return Vector(0.5 * ev->score(x)); },
      [](const Vector& x) { return Vector(-x); },
      [](const Vector& x) { return Vector(x.array().sin() - 0.5 * x.array().tanh()); },
  };
}

SuiteResult verify_constancy(const GaussianMixture& gmm0, const CorruptionProcess& proc,
                            const std::vector<double>& times, Eigen::Index num_samples, std::uint64_t seed,
                            double tolerance) {
  SuiteResult r{"constancy", true, {}, {}};
  std::ostringstream detail;
  double worst = 0.0;
  for (double t : times) {
    const GaussianMixture gmm_t = pushforward(gmm0, to_dense(proc.operator_at(t)), proc.sigma_at(t));
    const auto candidates = constancy_candidates(gmm_t);
    std::vector<McEstimate> est;
    const RandomSource base = RandomSource(seed).fork(static_cast<std::uint64_t>(std::llround(t * 1e6)));
    for (const auto& c : candidates) {
      RandomSource rng = base;
      est.push_back(estimate_J1_minus_J2(gmm0, proc, t, c, num_samples, rng));
    }
    double worst_t = 0.0;
    for (std::size_t a = 0; a < est.size(); ++a)
      for (std::size_t b = a + 1; b < est.size(); ++b) {
        const double se = std::hypot(est[a].std_error, est[b].std_error);
        const double z = std::abs(est[a].estimate - est[b].estimate) / se;
        worst_t = std::max(worst_t, z);
      }
    worst = std::max(worst, worst_t);
    detail << "t=" << t << " J1-J2=" << est[0].estimate << " max|diff|/se=" << worst_t << "; ";
    r.metrics.emplace_back("max_z_t" + std::to_string(t).substr(0, 4), worst_t);
  }
  r.passed = worst <= tolerance;
  r.metrics.emplace_back("max_z", worst);
  r.detail = detail.str();
  return r;
}

SuiteResult verify_gradients(const std::vector<ModelSpec>& specs, const CorruptionProcess& proc,
                             const LossConfig& loss, int num_params, std::uint64_t seed, double tolerance) {
  SuiteResult r{"gradient_check", true, {}, {}};
  RandomSource rng(seed);
  double worst = 0.0;
  std::ostringstream detail;
  for (const ModelSpec& spec : specs) {
    ScoreModel model = ScoreModel::create(spec, rng);
    model.parameters() = 0.3 * rng.normal_vector(model.parameters().size());
    const Matrix data = rng.normal_matrix(spec.data_dim, 64);
    const TrainBatch batch = make_batch(data, proc, 16, loss.t_min, rng);
    Vector grads;
    ssm_loss_and_grad(model, batch, proc, loss, grads);
    double worst_spec = 0.0;
    for (int k = 0; k < num_params; ++k) {
      const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(model.parameters().size())));
      const double h = 1e-5 * std::max(1.0, std::abs(model.parameters()[i]));
      ScoreModel plus = model, minus = model;
      plus.parameters()[i] += h;
      minus.parameters()[i] -= h;
      const double fd = (ssm_loss(plus, batch, proc, loss) - ssm_loss(minus, batch, proc, loss)) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(grads[i]), 1e-8});
      worst_spec = std::max(worst_spec, std::abs(fd - grads[i]) / scale);
    }
    worst = std::max(worst, worst_spec);
    detail << "width=" << spec.hidden_width << " layers=" << spec.hidden_layers << " rel=" << worst_spec << "; ";
  }
  r.passed = worst <= tolerance;
  r.metrics.emplace_back("max_relative_error", worst);
  r.detail = detail.str();
  return r;
}

Matrix ve_predictor_step(const Matrix& xt, const Matrix& x0_hat, double sigma_t, double sigma_prev,
                         const Matrix& eta) {
  const double var_t = sigma_t * sigma_t;
  const double step = var_t - sigma_prev * sigma_prev;
  const Matrix score = (x0_hat - xt) / var_t;
  return (xt + step * score) + std::sqrt(step) * eta;
}

SuiteResult verify_ve_reduction(Eigen::Index dim, Eigen::Index num_states, std::uint64_t seed) {
  SuiteResult r{"ve_reduction", true, {}, {}};
  Schedule grid;
  grid.entries = {{0.0, 0.0, 0.0}, {1.0, 1.0, 0.0}};
  const CorruptionProcess proc(OperatorFamily::fade(Vector::Zero(dim), 1.0), grid, NoiseSchedule{kSigmaMin, 1.0, 1.0});
  RandomSource rng(seed);
  const Matrix w = rng.normal_matrix(dim, dim) / std::sqrt(static_cast<double>(dim));
  const Denoiser denoiser = [w](const Matrix& x, double t) {
    return Matrix((w * x).array().tanh() * (1.0 - 0.5 * t));
  };
  Eigen::Index mismatches = 0;
  for (Eigen::Index k = 0; k < num_states; ++k) {
    const int steps = 1 + static_cast<int>(rng.index(128));
    const int level = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(steps)));
    const double t = grid_time(level, steps);
    const double dt = 1.0 / steps;
    const double prev = std::max(0.0, t - dt);
    const Matrix xt = proc.sigma_at(t) * rng.normal_matrix(dim, 1) + rng.normal_matrix(dim, 1);
    const std::uint64_t eta_seed = rng.splitmix(seed + static_cast<std::uint64_t>(k));
    RandomSource rng_a(eta_seed), rng_b(eta_seed);
    const Matrix a = momentum_step(xt, t, dt, denoiser, proc, rng_a, NoiseEstimate::Normalized);
    const Matrix eta = rng_b.normal_matrix(dim, 1);
    const Matrix b = ve_predictor_step(xt, denoiser(xt, t), proc.sigma_at(t), proc.sigma_at(prev), eta);
    if (!(a.array() == b.array()).all()) ++mismatches;
  }
  r.passed = mismatches == 0;
  r.metrics.emplace_back("states", static_cast<double>(num_states));
  r.metrics.emplace_back("mismatches", static_cast<double>(mismatches));
  r.detail = std::to_string(mismatches) + " of " + std::to_string(num_states) + " states differ";
  return r;
}

SuiteResult verify_oracle_sampler(const GaussianMixture& gaussian, const CorruptionProcess& proc,
                                  Eigen::Index num_samples, int num_steps, std::uint64_t seed, double threshold) {
  SuiteResult r{"oracle_sampler", true, {}, {}};
  if (gaussian.size() != 1) throw Error("oracle sampler check: needs a single Gaussian");
  SamplerConfig cfg;
  cfg.num_steps = num_steps;
  cfg.seed = seed;
  const TerminalDistribution p1{proc.operator_at(1.0).apply(gaussian.means[0]), proc.sigma_at(1.0)};
  const Matrix x = momentum_sample(oracle_denoiser(gaussian, proc), proc, cfg, p1, num_samples);
  const auto [m, c] = sample_moments<double>(x);
  const double w2 = gaussian_w2<double>(m, c, gaussian.means[0], gaussian.covs[0]);
  r.passed = std::isfinite(w2) && w2 <= threshold;
  r.metrics.emplace_back("gaussian_w2", w2);
  r.detail = "W2 = " + std::to_string(w2) + " (threshold " + std::to_string(threshold) + ")";
  return r;
}

}  // namespace softdiff
