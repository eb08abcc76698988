#include "softdiff/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace softdiff {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'M', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kActivationSilu = 0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("checkpoint: truncated stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::vector<Eigen::Index> layer_widths(const ModelSpec& spec) {
  std::vector<Eigen::Index> w{spec.input_dim()};
  for (int i = 0; i < spec.hidden_layers; ++i) w.push_back(spec.hidden_width);
  w.push_back(spec.data_dim);
  return w;
}

void validate_spec(const ModelSpec& spec) {
  if (spec.data_dim <= 0) throw RangeError("model: data_dim must be positive");
  if (spec.hidden_width <= 0 || spec.hidden_layers < 0) throw RangeError("model: bad hidden layer shape");
  if (spec.time_frequencies < 1) throw RangeError("model: need at least one time frequency");
  if (!(spec.freq_min > 0.0) || !(spec.freq_max >= spec.freq_min)) throw RangeError("model: bad frequency range");
}

}  // namespace

Eigen::Index ModelSpec::num_parameters() const {
  const auto w = layer_widths(*this);
  Eigen::Index n = 0;
  for (std::size_t i = 1; i < w.size(); ++i) n += w[i] * w[i - 1] + w[i];
  return n;
}

Matrix time_embedding(const ModelSpec& spec, const Vector& t) {
  const int k = spec.time_frequencies;
  Matrix out(2 * k, t.size());
  for (int f = 0; f < k; ++f) {
    const double u = k == 1 ? 0.0 : static_cast<double>(f) / (k - 1);
    const double freq = spec.freq_min * std::pow(spec.freq_max / spec.freq_min, u);
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      out(f, j) = std::sin(freq * t[j]);
      out(k + f, j) = std::cos(freq * t[j]);
    }
  }
  return out;
}

ScoreModel::ScoreModel(const ModelSpec& spec) : spec_(spec) {
  validate_spec(spec_);
  const auto w = layer_widths(spec_);
  Eigen::Index at = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    LayerOffset o{at, at + w[i] * w[i - 1], w[i], w[i - 1]};
    offsets_.push_back(o);
    at = o.bias + w[i];
  }
  params_ = Vector::Zero(at);
}

ScoreModel ScoreModel::create(const ModelSpec& spec, RandomSource& rng) {
  ScoreModel model(spec);
  for (int l = 0; l + 1 < model.num_layers(); ++l) {
    const auto& o = model.offsets_[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(o.cols));
    for (Eigen::Index i = 0; i < o.rows * o.cols; ++i) model.params_[o.weights + i] = scale * rng.normal();
  }
  return model;
}

Eigen::Map<const Matrix> ScoreModel::weights(int layer) const {
  const auto& o = offsets_[layer];
  return Eigen::Map<const Matrix>(params_.data() + o.weights, o.rows, o.cols);
}

Eigen::Map<const Vector> ScoreModel::bias(int layer) const {
  const auto& o = offsets_[layer];
  return Eigen::Map<const Vector>(params_.data() + o.bias, o.rows);
}

Matrix ScoreModel::forward(const Matrix& x, const Vector& t) const {
  ForwardCache cache;
  return forward(x, t, cache);
}

Matrix ScoreModel::forward(const Matrix& x, const Vector& t, ForwardCache& cache) const {
  check_dim("ScoreModel::forward input", spec_.data_dim, x.rows());
  check_dim("ScoreModel::forward times", x.cols(), t.size());
  cache.activations.clear();
  cache.preactivations.clear();

  Matrix input(spec_.input_dim(), x.cols());
  input.topRows(spec_.data_dim) = x;
  input.bottomRows(2 * spec_.time_frequencies) = time_embedding(spec_, t);
  cache.activations.push_back(std::move(input));

  for (int l = 0; l < num_layers(); ++l) {
    Matrix z = weights(l) * cache.activations.back();
    z.colwise() += bias(l);
    if (l + 1 == num_layers()) {
      cache.preactivations.push_back(z);
      return z;
    }
    Matrix a = z.unaryExpr([](double v) { return v * sigmoid(v); });
    cache.preactivations.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
  }
  return {};
}

Vector ScoreModel::backward(const ForwardCache& cache, const Matrix& upstream, Matrix* input_grad) const {
  if (!cache.valid() || static_cast<int>(cache.preactivations.size()) != num_layers())
    throw Error("ScoreModel::backward: no cached forward pass");
  check_dim("ScoreModel::backward upstream", spec_.data_dim, upstream.rows());
  check_dim("ScoreModel::backward batch", cache.activations.front().cols(), upstream.cols());

  Vector grads = Vector::Zero(params_.size());
  Matrix delta = upstream;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto& o = offsets_[l];
    Eigen::Map<Matrix>(grads.data() + o.weights, o.rows, o.cols).noalias() =
        delta * cache.activations[l].transpose();
    Eigen::Map<Vector>(grads.data() + o.bias, o.rows) = delta.rowwise().sum();
    Matrix back = weights(l).transpose() * delta;
    if (l == 0) {
      if (input_grad) *input_grad = back.topRows(spec_.data_dim);
      break;
    }
    const Matrix& z = cache.preactivations[l - 1];
    delta = back.cwiseProduct(z.unaryExpr([](double v) {
      const double s = sigmoid(v);
      return s * (1.0 + v * (1.0 - s));
    }));
  }
  return grads;
}

Tensor forward(const ScoreModel& model, const Tensor& xt, double t) {
  check_dim("forward", model.spec().data_dim, xt.data.size());
  const Matrix out = model.forward(Matrix(xt.data), Vector::Constant(1, t));
  return Tensor(xt.shape, out.col(0));
}

double AdamConfig::rate_at(long step) const {
  double rate = learning_rate;
  if (warmup_steps > 0 && step < warmup_steps) rate *= static_cast<double>(step) / warmup_steps;
  if (decay_until > warmup_steps && step > warmup_steps) {
    const double frac = static_cast<double>(step - warmup_steps) / (decay_until - warmup_steps);
    rate *= std::max(0.0, 1.0 - frac);
  }
  return rate;
}

OptimizerState OptimizerState::for_model(const ScoreModel& model) {
  const auto n = model.parameters().size();
  return OptimizerState{Vector::Zero(n), Vector::Zero(n), 0};
}

double optimizer_step(ScoreModel& model, const Vector& grads, OptimizerState& state, const AdamConfig& cfg) {
  auto& params = model.parameters();
  check_dim("optimizer_step gradient", params.size(), grads.size());
  check_dim("optimizer_step state", params.size(), state.m.size());
  if (!grads.allFinite()) throw NumericalError("optimizer_step: non-finite gradient");

  const double norm = grads.norm();
  const double scale = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;
  state.step += 1;
  const double rate = cfg.rate_at(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = scale * grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
  return norm;
}

void write_checkpoint(std::ostream& out, const ScoreModel& model, std::uint64_t config_hash) {
  const auto& s = model.spec();
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.data_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden_width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden_layers));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.time_frequencies));
  put_le<double>(out, s.freq_min);
  put_le<double>(out, s.freq_max);
  put_le<std::uint32_t>(out, kActivationSilu);
  put_le<std::uint64_t>(out, config_hash);
  const auto& p = model.parameters();
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) put_le<double>(out, p[i]);
  if (!out) throw Error("checkpoint: write failed");
}

ScoreModel read_checkpoint(std::istream& in, std::uint64_t* config_hash) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error("checkpoint: bad magic");
  if (get_le<std::uint32_t>(in) != kFormatVersion) throw Error("checkpoint: unsupported format version");
  ModelSpec s;
  s.data_dim = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
  s.hidden_width = static_cast<int>(get_le<std::uint32_t>(in));
  s.hidden_layers = static_cast<int>(get_le<std::uint32_t>(in));
  s.time_frequencies = static_cast<int>(get_le<std::uint32_t>(in));
  s.freq_min = get_le<double>(in);
  s.freq_max = get_le<double>(in);
  if (get_le<std::uint32_t>(in) != kActivationSilu) throw Error("checkpoint: unknown activation");
  const auto hash = get_le<std::uint64_t>(in);
  if (config_hash) *config_hash = hash;
  const auto count = get_le<std::uint64_t>(in);
  RandomSource unused(0);
  ScoreModel model = ScoreModel::create(s, unused);
  if (static_cast<Eigen::Index>(count) != model.parameters().size())
    throw DimensionError("checkpoint parameter count", model.parameters().size(), static_cast<long>(count));
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) model.parameters()[i] = get_le<double>(in);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ScoreModel& model, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open " + path.string());
  write_checkpoint(out, model, config_hash);
}

ScoreModel load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in, config_hash);
}

ScoreModel load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected, std::uint64_t* config_hash) {
  ScoreModel model = load_checkpoint(path, config_hash);
  const auto& s = model.spec();
  check_dim("checkpoint data_dim", expected.data_dim, s.data_dim);
  check_dim("checkpoint hidden_width", expected.hidden_width, s.hidden_width);
  check_dim("checkpoint hidden_layers", expected.hidden_layers, s.hidden_layers);
  check_dim("checkpoint time_frequencies", expected.time_frequencies, s.time_frequencies);
  if (s.freq_min != expected.freq_min || s.freq_max != expected.freq_max)
    throw Error("checkpoint: time embedding frequencies differ from the configured model");
  return model;
}

std::vector<char> serialize(const ScoreModel& model, std::uint64_t config_hash) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, model, config_hash);
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

}  // namespace softdiff
