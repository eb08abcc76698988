#include "softdiff/benchmarks.hpp"

namespace softdiff::benchmarks {

GaussianMixture gaussian_2d() {
  GaussianMixture g;
  g.weights = Vector::Ones(1);
  g.means = {Vector::Zero(2)};
  g.means[0] << 0.5, -0.3;
  Matrix c(2, 2);
  c << 0.030, 0.018, 0.018, 0.024;
  g.covs = {c};
  return g;
}

GaussianMixture mixture_2d() {
  GaussianMixture g;
  g.weights = Vector::Constant(4, 0.25);
  const double r = 1.0;
  const double pts[4][2] = {{r, r}, {-r, r}, {-r, -r}, {r, -r}};
  for (const auto& p : pts) {
    Vector m(2);
    m << p[0], p[1];
    g.means.push_back(m);
    g.covs.push_back(0.02 * Matrix::Identity(2, 2));
  }
  return g;
}

OperatorFamily blur_1x2(double std_max, int half_size) {
  return OperatorFamily::blur(1, 2, half_size, 0.01, std_max);
}

NoiseSchedule default_noise() { return NoiseSchedule{kSigmaMin, 0.1, 0.2}; }

CorruptionProcess collapsing_blur_process() { return CorruptionProcess::linear(blur_1x2(6.0, 8), default_noise()); }

CorruptionProcess training_blur_process() { return CorruptionProcess::linear(blur_1x2(1.0, 1), default_noise()); }

ModelSpec training_model_spec() {
  ModelSpec spec;
  spec.data_dim = 2;
  spec.freq_max = 10.0;
  return spec;
}

TrainConfig training_config() {
  TrainConfig cfg;
  cfg.steps = 16000;
  cfg.batch_size = 256;
  cfg.adam.learning_rate = 1e-3;
  cfg.adam.decay_until = 16000;
  return cfg;
}

}  // namespace softdiff::benchmarks
