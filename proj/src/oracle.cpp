#include "softdiff/oracle.hpp"

#include "json.hpp"

#include <cmath>

namespace softdiff {

using nlohmann::json;

DenseOperator to_dense(const LinearOperator& op) {
  if (op.dim() > kOracleMaxDim)
    throw RangeError("to_dense: dimension " + std::to_string(op.dim()) + " exceeds oracle limit " +
                     std::to_string(kOracleMaxDim));
  return DenseOperator{op.apply(Matrix(Matrix::Identity(op.dim(), op.dim())))};
}

GaussianMixture pushforward(const GaussianMixture& gmm, const DenseOperator& c, double sigma) {
  gmm.validate();
  if (!(sigma >= 0.0)) throw RangeError("pushforward: sigma must be non-negative");
  check_dim("pushforward", gmm.dim(), c.dim());
  GaussianMixture out;
  out.weights = gmm.weights;
  const Matrix noise = sigma * sigma * Matrix::Identity(c.dim(), c.dim());
  for (std::size_t i = 0; i < gmm.size(); ++i) {
    out.means.push_back(c.matrix * gmm.means[i]);
    Matrix cov = c.matrix * gmm.covs[i] * c.matrix.transpose() + noise;
    cov = 0.5 * (cov + cov.transpose());
    if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success)
      throw NumericalError("pushforward: covariance of component " + std::to_string(i) +
                           " is not positive definite");
    out.covs.push_back(std::move(cov));
  }
  return out;
}

Vector analytic_score(const GaussianMixture& gmm_t, const Vector& x) {
  if (!x.allFinite()) throw RangeError("analytic_score: non-finite input");
  return MixtureEvaluator<double>(gmm_t).score(x);
}

Tensor analytic_score(const GaussianMixture& gmm_t, const Tensor& x) {
  return Tensor(x.shape, analytic_score(gmm_t, Vector(x.data)));
}

PosteriorMean::PosteriorMean(const GaussianMixture& gmm0, const DenseOperator& c, double sigma)
    : prior_(gmm0), marginal_(pushforward(gmm0, c, sigma)) {
  if (!(sigma > 0.0)) throw RangeError("posterior_mean: sigma must be positive");
  const auto& pushed = marginal_.mixture();
  for (std::size_t i = 0; i < gmm0.size(); ++i) {
    // Sigma_i C^T S_i^{-1} = (S_i^{-1} C Sigma_i)^T since S_i is symmetric.
    const Matrix cs = c.matrix * gmm0.covs[i];
    gains_.push_back(marginal_.factor(i).solve(cs).transpose());
    observed_means_.push_back(pushed.means[i]);
  }
}

Vector PosteriorMean::operator()(const Vector& xt) const {
  const Vector w = marginal_.responsibilities(xt);
  Vector m = Vector::Zero(prior_.dim());
  for (std::size_t i = 0; i < prior_.size(); ++i)
    m += w[i] * (prior_.means[i] + gains_[i] * (xt - observed_means_[i]));
  return m;
}

Matrix PosteriorMean::columns(const Matrix& xt) const {
  Matrix out(prior_.dim(), xt.cols());
  for (Eigen::Index j = 0; j < xt.cols(); ++j) out.col(j) = (*this)(xt.col(j));
  return out;
}

Vector posterior_mean(const GaussianMixture& gmm0, const DenseOperator& c, double sigma, const Vector& xt) {
  return PosteriorMean(gmm0, c, sigma)(xt);
}

Vector j1_minus_j2_samples(const GaussianMixture& gmm0, const CorruptionProcess& proc, double t,
                           const ScoreCandidate& score_fn, Eigen::Index num_samples, RandomSource& rng) {
  if (!(t > 0.0)) throw RangeError("J1 - J2: t must be positive");
  const double sigma = proc.sigma_at(t);
  if (!(sigma > 0.0)) throw RangeError("J1 - J2: conditional score undefined at sigma = 0");
  const DenseOperator c = to_dense(proc.operator_at(t));
  const MixtureEvaluator<double> marginal(pushforward(gmm0, c, sigma));
  const Matrix x0 = gmm0.sample(num_samples, rng);
  const Matrix z = rng.normal_matrix(gmm0.dim(), num_samples);
  const Matrix clean = c.apply(x0);
  const Matrix xt = clean + sigma * z;
  Vector out(num_samples);
  for (Eigen::Index j = 0; j < num_samples; ++j) {
    const Vector s = score_fn(xt.col(j));
    const Vector marginal_score = marginal.score(xt.col(j));
    const Vector conditional_score = (clean.col(j) - xt.col(j)) / (sigma * sigma);
    out[j] = 0.5 * (s - marginal_score).squaredNorm() - 0.5 * (s - conditional_score).squaredNorm();
  }
  return out;
}

McEstimate mean_and_error(const Vector& samples) {
  const auto n = static_cast<double>(samples.size());
  const double mean = samples.mean();
  const double var = (samples.array() - mean).square().sum() / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

McEstimate estimate_J1_minus_J2(const GaussianMixture& gmm0, const CorruptionProcess& proc, double t,
                                const ScoreCandidate& score_fn, Eigen::Index num_samples, RandomSource& rng) {
  if (num_samples < 10000) throw RangeError("J1 - J2: need at least 1e4 samples");
  return mean_and_error(j1_minus_j2_samples(gmm0, proc, t, score_fn, num_samples, rng));
}

std::string gmm_to_json(const GaussianMixture& gmm) {
  json j;
  j["weights"] = std::vector<double>(gmm.weights.data(), gmm.weights.data() + gmm.weights.size());
  j["means"] = json::array();
  j["covs"] = json::array();
  for (std::size_t i = 0; i < gmm.size(); ++i) {
    j["means"].push_back(std::vector<double>(gmm.means[i].data(), gmm.means[i].data() + gmm.dim()));
    json rows = json::array();
    for (Eigen::Index r = 0; r < gmm.dim(); ++r) {
      std::vector<double> row(gmm.dim());
      for (Eigen::Index c = 0; c < gmm.dim(); ++c) row[c] = gmm.covs[i](r, c);
      rows.push_back(row);
    }
    j["covs"].push_back(rows);
  }
  return j.dump();
}

GaussianMixture gmm_from_json(const std::string& text) {
  GaussianMixture g;
  try {
    const json j = json::parse(text);
    const auto w = j.at("weights").get<std::vector<double>>();
    g.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    for (const auto& m : j.at("means")) {
      const auto v = m.get<std::vector<double>>();
      g.means.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    for (const auto& c : j.at("covs")) {
      const auto rows = c.get<std::vector<std::vector<double>>>();
      Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != m.cols()) throw Error("gaussian mixture: ragged covariance");
        for (std::size_t k = 0; k < rows[r].size(); ++k) m(r, k) = rows[r][k];
      }
      g.covs.push_back(std::move(m));
    }
  } catch (const json::exception& ex) {
    throw Error(std::string("gaussian mixture: malformed JSON: ") + ex.what());
  }
  g.validate();
  return g;
}

}  // namespace softdiff
