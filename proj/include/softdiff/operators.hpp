#pragma once

#include "softdiff/tensor.hpp"
#include "softdiff/types.hpp"

#include <variant>
#include <vector>

namespace softdiff {

/// Sampled 2-D Gaussian of size (2*half_size+1)^2, normalized to sum 1.
Matrix gaussian_kernel(int half_size, double std);

struct IdentityStage {
  Eigen::Index dim;
};

/// Blur of a row-major `height` x `width` image, zero padding outside it.
struct BlurStage {
  int height;
  int width;
  int half_size;
  double std;
  Matrix kernel;
};

struct FadeStage {
  Vector scale;
};

using OperatorStage = std::variant<IdentityStage, BlurStage, FadeStage>;

/// A deterministic linear map on R^n. Built from one primitive stage;
/// `compose` chains stages. Every primitive is symmetric, so the adjoint
/// of a chain is the reversed chain.
class LinearOperator {
 public:
  enum class Kind { Identity, GaussianBlur, DiagonalFade, Composite };

  static LinearOperator identity(Eigen::Index dim);
  static LinearOperator gaussian_blur(int height, int width, int half_size, double std);
  static LinearOperator diagonal_fade(Vector scale);

  Kind kind() const;
  Eigen::Index dim() const { return dim_; }
  const std::vector<OperatorStage>& stages() const { return stages_; }

  /// Applies the map to every column of `x`.
  Matrix apply(const Matrix& x) const;
  Vector apply(const Vector& x) const;
  Matrix apply_adjoint(const Matrix& x) const;

  /// outer(inner(x)).
  friend LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner);

 private:
  LinearOperator(Eigen::Index dim, std::vector<OperatorStage> stages)
      : dim_(dim), stages_(std::move(stages)) {}

  Eigen::Index dim_;
  std::vector<OperatorStage> stages_;
};

LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner);

/// C x for a flat tensor of matching size; the result keeps x's shape.
Tensor apply_operator(const LinearOperator& op, const Tensor& x);

}  // namespace softdiff
