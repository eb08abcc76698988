#include "softdiff/operators.hpp"

#include <cmath>

namespace softdiff {

Matrix gaussian_kernel(int half_size, double std) {
  if (half_size < 1) throw RangeError("gaussian_kernel: half_size must be positive");
  if (!(std > 0.0) || !std::isfinite(std)) throw RangeError("gaussian_kernel: std must be positive");
  const int size = 2 * half_size + 1;
  Matrix k(size, size);
  const double inv_two_var = 1.0 / (2.0 * std * std);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double di = i - half_size;
      const double dj = j - half_size;
      k(i, j) = std::exp(-(di * di + dj * dj) * inv_two_var);
    }
  return k / k.sum();
}

LinearOperator LinearOperator::identity(Eigen::Index dim) {
  if (dim <= 0) throw RangeError("identity: dimension must be positive");
  return LinearOperator(dim, {IdentityStage{dim}});
}

LinearOperator LinearOperator::gaussian_blur(int height, int width, int half_size, double std) {
  if (height <= 0 || width <= 0) throw RangeError("gaussian_blur: image size must be positive");
  BlurStage stage{height, width, half_size, std, gaussian_kernel(half_size, std)};
  return LinearOperator(Eigen::Index{height} * width, {std::move(stage)});
}

LinearOperator LinearOperator::diagonal_fade(Vector scale) {
  if (scale.size() == 0) throw RangeError("diagonal_fade: empty scale vector");
  if ((scale.array() < 0.0).any() || (scale.array() > 1.0).any())
    throw RangeError("diagonal_fade: scale entries must lie in [0, 1]");
  const auto dim = scale.size();
  return LinearOperator(dim, {FadeStage{std::move(scale)}});
}

LinearOperator::Kind LinearOperator::kind() const {
  if (stages_.size() != 1) return Kind::Composite;
  switch (stages_.front().index()) {
    case 0: return Kind::Identity;
    case 1: return Kind::GaussianBlur;
    default: return Kind::DiagonalFade;
  }
}

namespace {

Matrix blur_columns(const BlurStage& b, const Matrix& x) {
  const int h = b.half_size;
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index col = 0; col < x.cols(); ++col) {
    const double* in = x.col(col).data();
    double* dst = out.col(col).data();
    for (int r = 0; r < b.height; ++r) {
      const int dr_lo = std::max(-h, -r);
      const int dr_hi = std::min(h, b.height - 1 - r);
      for (int c = 0; c < b.width; ++c) {
        const int dc_lo = std::max(-h, -c);
        const int dc_hi = std::min(h, b.width - 1 - c);
        double acc = 0.0;
        for (int dr = dr_lo; dr <= dr_hi; ++dr) {
          const double* row = in + (r + dr) * b.width + c;
          for (int dc = dc_lo; dc <= dc_hi; ++dc) acc += b.kernel(dr + h, dc + h) * row[dc];
        }
        dst[r * b.width + c] = acc;
      }
    }
  }
  return out;
}

Matrix apply_stage(const OperatorStage& stage, const Matrix& x) {
  return std::visit(
      [&x](const auto& s) -> Matrix {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, IdentityStage>) {
          return x;
        } else if constexpr (std::is_same_v<S, BlurStage>) {
          return blur_columns(s, x);
        } else {
          return s.scale.asDiagonal() * x;
        }
      },
      stage);
}

}  // namespace

Matrix LinearOperator::apply(const Matrix& x) const {
  check_dim("LinearOperator::apply", dim_, x.rows());
  Matrix y = x;
  for (const auto& stage : stages_) y = apply_stage(stage, y);
  return y;
}

Vector LinearOperator::apply(const Vector& x) const {
  check_dim("LinearOperator::apply", dim_, x.size());
  return apply(Matrix(x)).col(0);
}

Matrix LinearOperator::apply_adjoint(const Matrix& x) const {
  check_dim("LinearOperator::apply_adjoint", dim_, x.rows());
  Matrix y = x;
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) y = apply_stage(*it, y);
  return y;
}

LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner) {
  check_dim("compose", outer.dim(), inner.dim());
  std::vector<OperatorStage> stages = inner.stages_;
  stages.insert(stages.end(), outer.stages_.begin(), outer.stages_.end());
  return LinearOperator(outer.dim(), std::move(stages));
}

Tensor apply_operator(const LinearOperator& op, const Tensor& x) {
  check_dim("apply_operator", op.dim(), x.data.size());
  return Tensor(x.shape, op.apply(x.data));
}

}  // namespace softdiff
