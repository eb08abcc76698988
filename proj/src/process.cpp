#include "softdiff/process.hpp"

#include <cmath>

namespace softdiff {

OperatorFamily OperatorFamily::blur(int height, int width, int half_size, double std_min, double std_max) {
  if (!(std_min > 0.0) || !(std_max >= std_min)) throw RangeError("blur family: need 0 < std_min <= std_max");
  if (half_size < 1) throw RangeError("blur family: half_size must be positive");
  if (height < 1 || width < 1) throw RangeError("blur family: image size must be positive");
  return OperatorFamily{Blur{height, width, half_size}, std_min, std_max};
}

OperatorFamily OperatorFamily::fade(Vector rates, double level_max) {
  if (rates.size() == 0 || (rates.array() < 0.0).any()) throw RangeError("fade family: rates must be non-negative");
  if (!(level_max >= 0.0)) throw RangeError("fade family: level_max must be non-negative");
  return OperatorFamily{Fade{std::move(rates)}, 0.0, level_max};
}

Eigen::Index OperatorFamily::dim() const {
  if (const auto* b = std::get_if<Blur>(&shape)) return Eigen::Index{b->height} * b->width;
  return std::get<Fade>(shape).rates.size();
}

LinearOperator OperatorFamily::make(double level) const {
  if (const auto* b = std::get_if<Blur>(&shape))
    return LinearOperator::gaussian_blur(b->height, b->width, b->half_size, level);
  const auto& f = std::get<Fade>(shape);
  return LinearOperator::diagonal_fade((-level * f.rates.array()).exp().matrix());
}

double NoiseSchedule::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("noise schedule: t = " + std::to_string(t) + " outside [0, 1]");
  if (t >= ramp_end || sigma_min == sigma_max) return sigma_max;
  return sigma_min * std::pow(sigma_max / sigma_min, t / ramp_end);
}

Schedule with_noise(Schedule s, const NoiseSchedule& noise) {
  for (auto& e : s.entries) e.sigma = noise.at(e.t);
  return s;
}

CorruptionProcess::CorruptionProcess(OperatorFamily family, Schedule schedule, NoiseSchedule noise)
    : family_(std::move(family)), schedule_(std::move(schedule)), noise_(noise) {
  // sigma_min = sigma_max = 0 is allowed for a noiseless process; otherwise
  // the geometric ramp needs a positive floor.
  const bool noiseless = noise_.sigma_min == 0.0 && noise_.sigma_max == 0.0;
  if (!noiseless && (!(noise_.sigma_min > 0.0) || !(noise_.sigma_max >= noise_.sigma_min)))
    throw RangeError("corruption process: need 0 < sigma_min <= sigma_max");
  if (!(noise_.ramp_end > 0.0 && noise_.ramp_end <= 1.0))
    throw RangeError("corruption process: noise ramp_end must lie in (0, 1]");
  schedule_.validate();
  const double lo = schedule_.entries.front().blur_std;
  const double hi = schedule_.entries.back().blur_std;
  if (lo < family_.level_min - 1e-12 || hi > family_.level_max + 1e-12)
    throw RangeError("corruption process: schedule levels outside the family range");
  schedule_ = with_noise(std::move(schedule_), noise_);
}

CorruptionProcess CorruptionProcess::linear(OperatorFamily family, NoiseSchedule noise, int ramp_points) {
  if (ramp_points < 2) throw RangeError("linear schedule: need at least two ramp points");
  Schedule s;
  s.metric = "linear";
  s.entries.push_back({0.0, family.level_min, 0.0});
  for (int k = 0; k < ramp_points; ++k) {
    const double u = static_cast<double>(k) / (ramp_points - 1);
    const double t = noise.ramp_end + (1.0 - noise.ramp_end) * u;
    const double level = family.level_min + (family.level_max - family.level_min) * u;
    if (t == 0.0) continue;
    s.entries.push_back({k == ramp_points - 1 ? 1.0 : t, level, 0.0});
  }
  return CorruptionProcess(std::move(family), std::move(s), noise);
}

double CorruptionProcess::level_at(double t) const { return schedule_.level_at(t); }

double CorruptionProcess::sigma_at(double t) const { return noise_.at(t); }

LinearOperator CorruptionProcess::operator_at(double t) const { return family_.make(level_at(t)); }

LinearOperator operator_at(const CorruptionProcess& proc, double t) { return proc.operator_at(t); }

Tensor sample_perturbation(const CorruptionProcess& proc, const Tensor& x0, double t, RandomSource& rng) {
  check_dim("sample_perturbation", proc.dim(), x0.data.size());
  const Matrix x = perturb(proc, Matrix(x0.data), t, rng);
  return Tensor(x0.shape, x.col(0));
}

Matrix perturb(const CorruptionProcess& proc, const Matrix& x0, double t, RandomSource& rng, Matrix* z) {
  check_dim("perturb", proc.dim(), x0.rows());
  const double sigma = proc.sigma_at(t);
  Matrix noise = rng.normal_matrix(x0.rows(), x0.cols());
  Matrix xt = proc.operator_at(t).apply(x0) + sigma * noise;
  if (z) *z = std::move(noise);
  return xt;
}

}  // namespace softdiff
