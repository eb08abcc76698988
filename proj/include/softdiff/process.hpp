#pragma once

#include "softdiff/operators.hpp"
#include "softdiff/random.hpp"
#include "softdiff/schedule.hpp"

#include <variant>

namespace softdiff {

/// Noise level floor used in place of sigma_0 = 0.
inline constexpr double kSigmaMin = 1e-3;

/// One-parameter family of operators: `make(level)` for level in [level_min, level_max].
struct OperatorFamily {
  struct Blur {
    int height = 8;
    int width = 8;
    int half_size = 8;
  };
  struct Fade {
    /// scale_i(level) = exp(-rates_i * level)
    Vector rates;
  };

  std::variant<Blur, Fade> shape;
  double level_min = 0.01;
  double level_max = 6.0;

  static OperatorFamily blur(int height, int width, int half_size, double std_min, double std_max);
  static OperatorFamily fade(Vector rates, double level_max);

  Eigen::Index dim() const;
  bool is_blur() const { return std::holds_alternative<Blur>(shape); }
  LinearOperator make(double level) const;
};

/// Geometric growth sigma_min -> sigma_max on [0, ramp_end], constant afterwards.
struct NoiseSchedule {
  double sigma_min = kSigmaMin;
  double sigma_max = 0.1;
  double ramp_end = 0.2;

  double at(double t) const;
};

/// x_t = C_t x_0 + sigma_t z. The operator level follows the schedule grid
/// by linear interpolation; sigma follows the noise schedule.
class CorruptionProcess {
 public:
  CorruptionProcess(OperatorFamily family, Schedule schedule, NoiseSchedule noise);

  /// Grid with no corruption on [0, ramp_end] and a linear level ramp to
  /// level_max on [ramp_end, 1].
  static CorruptionProcess linear(OperatorFamily family, NoiseSchedule noise, int ramp_points = 2);

  Eigen::Index dim() const { return family_.dim(); }
  const OperatorFamily& family() const { return family_; }
  const Schedule& schedule() const { return schedule_; }
  const NoiseSchedule& noise() const { return noise_; }

  double level_at(double t) const;
  double sigma_at(double t) const;
  LinearOperator operator_at(double t) const;

 private:
  OperatorFamily family_;
  Schedule schedule_;
  NoiseSchedule noise_;
};

/// Rewrites the sigma column of `s` from the noise schedule.
Schedule with_noise(Schedule s, const NoiseSchedule& noise);

LinearOperator operator_at(const CorruptionProcess& proc, double t);

/// C_t x0 + sigma_t z for a single item.
Tensor sample_perturbation(const CorruptionProcess& proc, const Tensor& x0, double t, RandomSource& rng);

/// Column-wise perturbation at a shared t; `z` receives the standard normal draws.
Matrix perturb(const CorruptionProcess& proc, const Matrix& x0, double t, RandomSource& rng, Matrix* z = nullptr);

}  // namespace softdiff
