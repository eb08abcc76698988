#include "softdiff/objective.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace softdiff {

namespace {

double checked_sigma(const CorruptionProcess& proc, double t) {
  const double sigma = proc.sigma_at(t);
  if (!(sigma >= kSigmaMin * (1.0 - 1e-12)))
    throw RangeError("sigma_t = " + std::to_string(sigma) + " below the noise floor at t = " + std::to_string(t));
  return sigma;
}

}  // namespace

void TrainBatch::validate() const {
  const auto b = x0.cols();
  check_dim("batch t", b, t.size());
  check_dim("batch x_t", b, xt.cols());
  check_dim("batch noise", b, noise.cols());
  check_dim("batch x_t rows", x0.rows(), xt.rows());
  check_dim("batch noise rows", x0.rows(), noise.rows());
}

double loss_weight(const LossConfig& cfg, double sigma) {
  if (cfg.weighting == Weighting::Sigma4) return 1.0;
  const double s2 = sigma * sigma;
  return 1.0 / (s2 * s2);
}

TrainBatch make_batch(const Matrix& data, const CorruptionProcess& proc, Eigen::Index batch_size, double t_min,
                      RandomSource& rng) {
  if (data.cols() == 0) throw Error("make_batch: empty dataset");
  if (!(t_min > 0.0 && t_min <= 1.0)) throw RangeError("make_batch: t_min must lie in (0, 1]");
  check_dim("make_batch", proc.dim(), data.rows());
  TrainBatch b;
  b.x0.resize(data.rows(), batch_size);
  b.t.resize(batch_size);
  for (Eigen::Index j = 0; j < batch_size; ++j) {
    b.x0.col(j) = data.col(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data.cols()))));
    b.t[j] = std::max(t_min, rng.uniform());
  }
  b.noise = rng.normal_matrix(data.rows(), batch_size);
  b.xt.resize(data.rows(), batch_size);
  for (Eigen::Index j = 0; j < batch_size; ++j)
    b.xt.col(j) = proc.operator_at(b.t[j]).apply(Vector(b.x0.col(j))) + proc.sigma_at(b.t[j]) * b.noise.col(j);
  return b;
}

Matrix denoise(const ScoreModel& model, const Matrix& xt, double t) {
  return model.forward(xt, Vector::Constant(xt.cols(), t)) + xt;
}

Matrix score_from_model(const ScoreModel& model, const Matrix& xt, double t, const CorruptionProcess& proc) {
  const double sigma = checked_sigma(proc, t);
  return (proc.operator_at(t).apply(denoise(model, xt, t)) - xt) / (sigma * sigma);
}

Tensor score_from_model(const ScoreModel& model, const Tensor& xt, double t, const CorruptionProcess& proc) {
  check_dim("score_from_model", proc.dim(), xt.data.size());
  return Tensor(xt.shape, score_from_model(model, Matrix(xt.data), t, proc).col(0));
}

double ssm_loss_from_prediction(const Matrix& phi, const TrainBatch& batch, const CorruptionProcess& proc,
                                const LossConfig& cfg, Matrix* grad_phi) {
  batch.validate();
  check_dim("ssm_loss prediction", batch.x0.rows(), phi.rows());
  check_dim("ssm_loss batch", batch.size(), phi.cols());
  const auto b = batch.size();
  if (grad_phi) grad_phi->resize(phi.rows(), b);
  double total = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const LinearOperator c = proc.operator_at(batch.t[j]);
    const double w = loss_weight(cfg, proc.sigma_at(batch.t[j]));
    const Vector diff = phi.col(j) - (batch.x0.col(j) - batch.xt.col(j));
    const Vector filtered = c.apply(diff);
    total += w * filtered.squaredNorm();
    if (grad_phi) grad_phi->col(j) = (2.0 * w / static_cast<double>(b)) * c.apply_adjoint(Matrix(filtered)).col(0);
  }
  return total / static_cast<double>(b);
}

double ssm_loss(const ScoreModel& model, const TrainBatch& batch, const CorruptionProcess& proc, const LossConfig& cfg) {
  return ssm_loss_from_prediction(model.forward(batch.xt, batch.t), batch, proc, cfg);
}

double ssm_loss_and_grad(const ScoreModel& model, const TrainBatch& batch, const CorruptionProcess& proc,
                         const LossConfig& cfg, Vector& grads) {
  ForwardCache cache;
  const Matrix phi = model.forward(batch.xt, batch.t, cache);
  Matrix upstream;
  const double loss = ssm_loss_from_prediction(phi, batch, proc, cfg, &upstream);
  grads = model.backward(cache, upstream);
  return loss;
}

double dsm_loss(const ScoreNetwork& score, const TrainBatch& batch, const CorruptionProcess& proc,
                const LossConfig& cfg) {
  batch.validate();
  const Matrix s = score(batch.xt, batch.t);
  check_dim("dsm_loss score rows", batch.x0.rows(), s.rows());
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    const double sigma = checked_sigma(proc, batch.t[j]);
    const Vector target =
        (proc.operator_at(batch.t[j]).apply(Vector(batch.x0.col(j))) - batch.xt.col(j)) / (sigma * sigma);
    const double s4 = sigma * sigma * sigma * sigma;
    total += loss_weight(cfg, sigma) * s4 * (s.col(j) - target).squaredNorm();
  }
  return total / static_cast<double>(batch.size());
}

double dsm_loss(const ScoreModel& raw_score_model, const TrainBatch& batch, const CorruptionProcess& proc,
                const LossConfig& cfg) {
  return dsm_loss([&](const Matrix& x, const Vector& t) { return raw_score_model.forward(x, t); }, batch, proc, cfg);
}

TrainResult train(ScoreModel model, const Matrix& data, const CorruptionProcess& proc, const TrainConfig& cfg,
                  RandomSource& rng) {
  if (data.cols() == 0) throw Error("train: empty dataset");
  if (!(cfg.loss.t_min > 0.0)) throw RangeError("train: t_min must be positive");
  if (cfg.steps < 0 || cfg.batch_size < 1) throw RangeError("train: bad step count or batch size");
  OptimizerState state = OptimizerState::for_model(model);
  TrainResult result{std::move(model), {}};
  result.trace.reserve(static_cast<std::size_t>(cfg.steps));
  Vector grads;
  for (long step = 1; step <= cfg.steps; ++step) {
    const TrainBatch batch = make_batch(data, proc, cfg.batch_size, cfg.loss.t_min, rng);
    const double loss = ssm_loss_and_grad(result.model, batch, proc, cfg.loss, grads);
    if (!std::isfinite(loss) || !grads.allFinite())
      throw NumericalError("train: loss diverged at step " + std::to_string(step));
    optimizer_step(result.model, grads, state, cfg.adam);
    result.trace.push_back({step, loss, batch.t.mean()});
  }
  return result;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "step,loss,t_mean\n";
  char buf[96];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", r.step, r.loss, r.t_mean);
    out << buf;
  }
  return out.str();
}

}  // namespace softdiff
