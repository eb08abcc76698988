#pragma once

#include "softdiff/model.hpp"
#include "softdiff/process.hpp"

#include <functional>
#include <vector>

namespace softdiff {

/// Columns are samples; column j was perturbed at t[j] with noise column j.
struct TrainBatch {
  Matrix x0;
  Vector t;
  Matrix xt;
  Matrix noise;

  Eigen::Index size() const { return x0.cols(); }
  void validate() const;
};

enum class Weighting {
  /// w(t) = sigma_t^4, cancelling the 1/sigma_t^4 factor: plain filtered-residual MSE.
  Sigma4,
  /// w(t) = 1 with the 1/sigma_t^4 factor kept.
  Uniform,
};

struct LossConfig {
  Weighting weighting = Weighting::Sigma4;
  double t_min = 1e-3;
};

/// Per-sample multiplier of |C_t (phi - r_t)|^2.
double loss_weight(const LossConfig& cfg, double sigma);

/// Draws x0 uniformly from the columns of `data`, t ~ U[0, 1] clamped to
/// [t_min, 1], and perturbs each sample at its own t.
TrainBatch make_batch(const Matrix& data, const CorruptionProcess& proc, Eigen::Index batch_size, double t_min,
                      RandomSource& rng);

/// s = (C_t h - x_t) / sigma_t^2 with h = phi(x_t | t) + x_t.
Tensor score_from_model(const ScoreModel& model, const Tensor& xt, double t, const CorruptionProcess& proc);
Matrix score_from_model(const ScoreModel& model, const Matrix& xt, double t, const CorruptionProcess& proc);

/// h = phi(x_t | t) + x_t for every column.
Matrix denoise(const ScoreModel& model, const Matrix& xt, double t);

/// mean_b w(t_b) |C_{t_b} (phi_b - r_b)|^2 given the residual predictions.
double ssm_loss_from_prediction(const Matrix& phi, const TrainBatch& batch, const CorruptionProcess& proc,
                                const LossConfig& cfg, Matrix* grad_phi = nullptr);
double ssm_loss(const ScoreModel& model, const TrainBatch& batch, const CorruptionProcess& proc, const LossConfig& cfg);
/// Loss and parameter gradient.
double ssm_loss_and_grad(const ScoreModel& model, const TrainBatch& batch, const CorruptionProcess& proc,
                         const LossConfig& cfg, Vector& grads);

/// Raw score network: columns of x at per-column times t.
using ScoreNetwork = std::function<Matrix(const Matrix& x, const Vector& t)>;

/// mean_b w(t_b) |s_b - (C_{t_b} x0_b - x_t,b) / sigma^2|^2 with w = sigma^4
/// (Sigma4) or 1 (Uniform), so that under s = (C h - x_t) / sigma^2 it equals
/// ssm_loss on the same batch.
double dsm_loss(const ScoreNetwork& score, const TrainBatch& batch, const CorruptionProcess& proc,
                const LossConfig& cfg);
double dsm_loss(const ScoreModel& raw_score_model, const TrainBatch& batch, const CorruptionProcess& proc,
                const LossConfig& cfg);

struct TrainConfig {
  LossConfig loss;
  AdamConfig adam;
  long steps = 1000;
  Eigen::Index batch_size = 128;
};

struct TraceRow {
  long step;
  double loss;
  double t_mean;
};

struct TrainResult {
  ScoreModel model;
  std::vector<TraceRow> trace;
};

/// Minibatch Adam on ssm_loss. Throws NumericalError naming the step if the loss diverges.
TrainResult train(ScoreModel model, const Matrix& data, const CorruptionProcess& proc, const TrainConfig& cfg,
                  RandomSource& rng);

/// "step,loss,t_mean" with a header row.
std::string trace_to_csv(const std::vector<TraceRow>& trace);

}  // namespace softdiff
