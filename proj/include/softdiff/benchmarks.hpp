#pragma once

#include "softdiff/gaussian_mixture.hpp"
#include "softdiff/objective.hpp"
#include "softdiff/process.hpp"

namespace softdiff::benchmarks {

/// Single correlated 2-D Gaussian.
GaussianMixture gaussian_2d();

/// Four-component 2-D mixture.
GaussianMixture mixture_2d();

/// Two-coordinate data treated as a 1x2 image under blur with zero
/// padding; sigma ramps 1e-3 -> 0.1 on [0, 0.2].
OperatorFamily blur_1x2(double std_max, int half_size);

NoiseSchedule default_noise();

/// Blur strong enough at t = 1 that C_1 nearly collapses the data.
CorruptionProcess collapsing_blur_process();

/// Mild 3-tap blur used for the trained-score benchmark.
CorruptionProcess training_blur_process();

ModelSpec training_model_spec();

/// 16000 Adam steps at batch 256, lr 1e-3 decayed linearly to zero.
TrainConfig training_config();

}  // namespace softdiff::benchmarks
