#pragma once

#include "softdiff/random.hpp"
#include "softdiff/types.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace softdiff {

/// Weighted sum of full-covariance Gaussians in R^n.
template <typename Scalar>
struct BasicGaussianMixture {
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  VectorS weights;
  std::vector<VectorS> means;
  std::vector<MatrixS> covs;

  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t size() const { return means.size(); }

  /// Throws unless weights are positive and sum to 1 (1e-12), shapes agree,
  /// and every covariance is symmetric positive definite.
  void validate() const {
    if (means.empty()) throw Error("gaussian mixture: no components");
    if (static_cast<std::size_t>(weights.size()) != means.size() || covs.size() != means.size())
      throw Error("gaussian mixture: weights, means and covs disagree in count");
    if ((weights.array() <= Scalar(0)).any()) throw Error("gaussian mixture: weights must be positive");
    if (std::abs(weights.sum() - Scalar(1)) > Scalar(1e-12))
      throw Error("gaussian mixture: weights must sum to 1");
    const auto n = dim();
    for (std::size_t i = 0; i < size(); ++i) {
      check_dim("gaussian mixture mean " + std::to_string(i), n, means[i].size());
      if (covs[i].rows() != n || covs[i].cols() != n)
        throw DimensionError("gaussian mixture cov " + std::to_string(i), n, covs[i].rows());
      if (!covs[i].isApprox(covs[i].transpose(), Scalar(1e-12)))
        throw Error("gaussian mixture: covariance " + std::to_string(i) + " is not symmetric");
      if (Eigen::LLT<MatrixS>(covs[i]).info() != Eigen::Success)
        throw NumericalError("gaussian mixture: covariance " + std::to_string(i) + " is not positive definite");
    }
  }

  VectorS mean() const {
    VectorS m = VectorS::Zero(dim());
    for (std::size_t i = 0; i < size(); ++i) m += weights[i] * means[i];
    return m;
  }

  MatrixS covariance() const {
    const VectorS m = mean();
    MatrixS c = MatrixS::Zero(dim(), dim());
    for (std::size_t i = 0; i < size(); ++i) {
      const VectorS d = means[i] - m;
      c += weights[i] * (covs[i] + d * d.transpose());
    }
    return c;
  }

  /// Draws `count` samples as columns.
  MatrixS sample(Eigen::Index count, RandomSource& rng) const {
    std::vector<MatrixS> chol;
    for (const auto& c : covs) chol.push_back(Eigen::LLT<MatrixS>(c).matrixL());
    MatrixS out(dim(), count);
    for (Eigen::Index j = 0; j < count; ++j) {
      const double u = rng.uniform();
      std::size_t k = 0;
      double acc = weights[0];
      while (u >= acc && k + 1 < size()) acc += weights[++k];
      out.col(j) = means[k] + chol[k] * rng.normal_vector(dim()).template cast<Scalar>();
    }
    return out;
  }
};

using GaussianMixture = BasicGaussianMixture<double>;

/// Per-component factorizations for repeated density, score and
/// responsibility evaluations.
template <typename Scalar>
class MixtureEvaluator {
 public:
  using Mixture = BasicGaussianMixture<Scalar>;
  using VectorS = typename Mixture::VectorS;
  using MatrixS = typename Mixture::MatrixS;

  explicit MixtureEvaluator(const Mixture& gmm) : gmm_(gmm) {
    gmm_.validate();
    const Scalar log2pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
    for (std::size_t i = 0; i < gmm_.size(); ++i) {
      Eigen::LLT<MatrixS> llt(gmm_.covs[i]);
      if (llt.info() != Eigen::Success)
        throw NumericalError("mixture component " + std::to_string(i) + " covariance is not positive definite");
      const Scalar logdet = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
      log_norm_.push_back(std::log(gmm_.weights[i]) - Scalar(0.5) * (gmm_.dim() * log2pi + logdet));
      llt_.push_back(std::move(llt));
    }
  }

  const Mixture& mixture() const { return gmm_; }

  /// log pi_i + log N(x; m_i, S_i) for every component.
  VectorS component_log_densities(const VectorS& x) const {
    check_dim("mixture evaluation", gmm_.dim(), x.size());
    VectorS out(gmm_.size());
    for (std::size_t i = 0; i < gmm_.size(); ++i) {
      const VectorS d = x - gmm_.means[i];
      const VectorS y = llt_[i].matrixL().solve(d);
      out[i] = log_norm_[i] - Scalar(0.5) * y.squaredNorm();
    }
    return out;
  }

  /// Posterior component probabilities, computed with max-subtraction.
  VectorS responsibilities(const VectorS& x) const {
    const VectorS lp = component_log_densities(x);
    const Scalar top = lp.maxCoeff();
    if (!std::isfinite(top)) throw NumericalError("mixture responsibilities underflow: point too far in the tails");
    VectorS w = (lp.array() - top).exp();
    return w / w.sum();
  }

  Scalar log_density(const VectorS& x) const {
    const VectorS lp = component_log_densities(x);
    const Scalar top = lp.maxCoeff();
    if (!std::isfinite(top)) throw NumericalError("mixture log density underflow: point too far in the tails");
    return top + std::log((lp.array() - top).exp().sum());
  }

  /// Gradient of the log density: sum_i w_i(x) S_i^{-1} (m_i - x).
  VectorS score(const VectorS& x) const {
    const VectorS w = responsibilities(x);
    VectorS s = VectorS::Zero(x.size());
    for (std::size_t i = 0; i < gmm_.size(); ++i) s += w[i] * llt_[i].solve(gmm_.means[i] - x);
    return s;
  }

  MatrixS score_columns(const MatrixS& x) const {
    MatrixS out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = score(x.col(j));
    return out;
  }

  const Eigen::LLT<MatrixS>& factor(std::size_t i) const { return llt_[i]; }

 private:
  Mixture gmm_;
  std::vector<Eigen::LLT<MatrixS>> llt_;
  std::vector<Scalar> log_norm_;
};

/// Closed-form 2-Wasserstein distance between two Gaussians.
template <typename Scalar>
Scalar gaussian_w2(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& m1,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& s1,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& m2,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& s2) {
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  auto sqrtm = [](const MatrixS& a) {
    Eigen::SelfAdjointEigenSolver<MatrixS> es(a);
    return MatrixS(es.eigenvectors() * es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal() *
                   es.eigenvectors().transpose());
  };
  const MatrixS r2 = sqrtm(s2);
  const MatrixS cross = sqrtm(r2 * s1 * r2);
  const Scalar d2 = (m1 - m2).squaredNorm() + (s1 + s2 - Scalar(2) * cross).trace();
  return std::sqrt(std::max(d2, Scalar(0)));
}

/// Sample mean and (1/N-normalized) covariance of the columns of `x`.
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
sample_moments(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m = x.rowwise().mean();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c = x.colwise() - m;
  return {m, c * c.transpose() / Scalar(x.cols())};
}

std::string gmm_to_json(const GaussianMixture& gmm);
GaussianMixture gmm_from_json(const std::string& text);

}  // namespace softdiff
