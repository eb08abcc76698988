#pragma once

#include "softdiff/random.hpp"
#include "softdiff/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace softdiff {

struct ModelSpec {
  Eigen::Index data_dim = 2;
  int hidden_width = 128;
  int hidden_layers = 3;
  int time_frequencies = 16;
  double freq_min = 1.0;
  double freq_max = 1000.0;

  Eigen::Index input_dim() const { return data_dim + 2 * time_frequencies; }
  Eigen::Index num_parameters() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Sinusoidal time features, frequencies geometric in [freq_min, freq_max].
/// Rows are [sin(f_k t)..., cos(f_k t)...], one column per entry of t.
Matrix time_embedding(const ModelSpec& spec, const Vector& t);

/// Activations kept by a forward pass for the matching backward pass.
struct ForwardCache {
  std::vector<Matrix> activations;  // a_0 = input, a_l = silu(z_l)
  std::vector<Matrix> preactivations;
  bool valid() const { return !activations.empty(); }
};

/// Time-conditioned MLP predicting the residual phi(x_t | t). Parameters
/// live in one flat vector; each affine layer is a (W, b) view into it.
class ScoreModel {
 public:
  /// Hidden layers get LeCun-normal weights; the output layer is zero so a
  /// fresh model predicts phi = 0.
  static ScoreModel create(const ModelSpec& spec, RandomSource& rng);

  const ModelSpec& spec() const { return spec_; }
  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }
  int num_layers() const { return static_cast<int>(offsets_.size()); }

  /// Columns of x are samples; t holds one time per column.
  Matrix forward(const Matrix& x, const Vector& t) const;
  Matrix forward(const Matrix& x, const Vector& t, ForwardCache& cache) const;

  /// Reverse-mode pass for a scalar loss with dL/d(output) = `upstream`.
  /// Returns dL/d(parameters); writes dL/dx into `input_grad` if given.
  Vector backward(const ForwardCache& cache, const Matrix& upstream, Matrix* input_grad = nullptr) const;

  bool operator==(const ScoreModel& other) const { return spec_ == other.spec_ && params_ == other.params_; }

 private:
  struct LayerOffset {
    Eigen::Index weights;
    Eigen::Index bias;
    Eigen::Index rows;
    Eigen::Index cols;
  };

  explicit ScoreModel(const ModelSpec& spec);

  Eigen::Map<const Matrix> weights(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;

  ModelSpec spec_;
  Vector params_;
  std::vector<LayerOffset> offsets_;
};

Tensor forward(const ScoreModel& model, const Tensor& xt, double t);

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;
  long warmup_steps = 500;
  /// When positive, the rate decays linearly from the end of warmup to zero
  /// at this step.
  long decay_until = 0;

  double rate_at(long step) const;
};

struct OptimizerState {
  Vector m;
  Vector v;
  long step = 0;

  static OptimizerState for_model(const ScoreModel& model);
};

/// One Adam update with bias correction and global-norm clipping.
/// Returns the gradient norm before clipping.
double optimizer_step(ScoreModel& model, const Vector& grads, OptimizerState& state, const AdamConfig& cfg);

// Checkpoint: "SDM1", architecture header, config hash, f64 little-endian parameters.
void write_checkpoint(std::ostream& out, const ScoreModel& model, std::uint64_t config_hash = 0);
ScoreModel read_checkpoint(std::istream& in, std::uint64_t* config_hash = nullptr);
void save_checkpoint(const std::filesystem::path& path, const ScoreModel& model, std::uint64_t config_hash = 0);
ScoreModel load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);
/// Loads and checks the stored architecture against `expected`.
ScoreModel load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected,
                           std::uint64_t* config_hash = nullptr);

std::vector<char> serialize(const ScoreModel& model, std::uint64_t config_hash = 0);

}  // namespace softdiff
