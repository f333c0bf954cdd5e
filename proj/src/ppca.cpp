#include "netadmm/ppca.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace netadmm {

void PpcaParams::validate() const {
  if (W.cols() < 1 || W.rows() < W.cols()) throw std::invalid_argument("PpcaParams: need D >= M >= 1");
  if (mu.size() != W.rows()) throw std::invalid_argument("PpcaParams: mu length must equal D");
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("PpcaParams: precision a must be > 0");
  if (!W.allFinite() || !mu.allFinite()) throw std::invalid_argument("PpcaParams: non-finite W or mu");
}

Eigen::VectorXd flatten(const PpcaParams& p) {
  const Eigen::Index wsize = p.W.size();
  Eigen::VectorXd theta(wsize + p.mu.size() + 1);
  theta.head(wsize) = p.W.reshaped();
  theta.segment(wsize, p.mu.size()) = p.mu;
  theta(theta.size() - 1) = p.a;
  return theta;
}

PpcaParams unflatten(const Eigen::VectorXd& theta, Eigen::Index D, Eigen::Index M) {
  if (theta.size() != D * M + D + 1) throw std::invalid_argument("unflatten: size does not match D and M");
  PpcaParams p;
  p.W = theta.head(D * M).reshaped(D, M);
  p.mu = theta.segment(D * M, D);
  p.a = theta(theta.size() - 1);
  return p;
}

LatentMoments e_step(const PpcaParams& params, const Eigen::MatrixXd& X) {
  if (!(params.a > 0.0)) throw std::invalid_argument("e_step: precision must be positive");
  if (X.rows() != params.ambient_dim()) throw std::invalid_argument("e_step: data rows must equal D");
  const Eigen::Index M = params.latent_dim();
  const double noise_var = 1.0 / params.a;
  const Eigen::MatrixXd precision =
      params.W.transpose() * params.W + noise_var * Eigen::MatrixXd::Identity(M, M);
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success || !precision.allFinite())
    throw IllConditionedError("e_step: W'W + a^{-1} I is not positive definite");
  LatentMoments out;
  out.Ez = llt.solve(params.W.transpose() * (X.colwise() - params.mu));
  out.cov = noise_var * llt.solve(Eigen::MatrixXd::Identity(M, M));
  if (!out.Ez.allFinite() || !out.cov.allFinite()) throw IllConditionedError("e_step: non-finite moments");
  return out;
}

// Evaluated in latent space: |W W' + s I_D| = s^(D-M) |W'W + s I_M| and
// (W W' + s I)^{-1} = (I - W (W'W + s I)^{-1} W') / s, with s = 1/a.
double negative_log_likelihood(const PpcaParams& params, const Eigen::MatrixXd& X) {
  const Eigen::Index D = params.ambient_dim();
  const Eigen::Index M = params.latent_dim();
  if (X.rows() != D) throw std::invalid_argument("negative_log_likelihood: data rows must equal D");
  if (!(params.a > 0.0) || !std::isfinite(params.a))
    throw std::domain_error("negative_log_likelihood: precision must be positive and finite");
  const double noise_var = 1.0 / params.a;
  const Eigen::MatrixXd inner = params.W.transpose() * params.W + noise_var * Eigen::MatrixXd::Identity(M, M);
  const Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("negative_log_likelihood: marginal covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double log_det =
      static_cast<double>(D - M) * std::log(noise_var) + 2.0 * L.diagonal().array().log().sum();
  const Eigen::MatrixXd centered = X.colwise() - params.mu;
  const Eigen::MatrixXd projected = llt.matrixL().solve(params.W.transpose() * centered);
  const double quad = (centered.squaredNorm() - projected.squaredNorm()) / noise_var;
  const auto n = static_cast<double>(X.cols());
  return 0.5 * (n * (static_cast<double>(D) * std::log(2.0 * std::numbers::pi) + log_det) + quad);
}

double expected_residual_sq(const PpcaParams& params, const LatentMoments& moments, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd centered = X.colwise() - params.mu;
  const Eigen::MatrixXd WtW = params.W.transpose() * params.W;
  return centered.squaredNorm() - 2.0 * (params.W * moments.Ez).cwiseProduct(centered).sum() +
         (moments.sum_ezz() * WtW).trace();
}

PpcaParams centralized_em_step(const PpcaParams& params, const Eigen::MatrixXd& X) {
  const LatentMoments moments = e_step(params, X);
  const auto n = static_cast<double>(X.cols());
  PpcaParams next;
  next.mu = (X - params.W * moments.Ez).rowwise().sum() / n;
  const Eigen::MatrixXd sum_ezz = moments.sum_ezz();
  const Eigen::MatrixXd cross = (X.colwise() - next.mu) * moments.Ez.transpose();
  next.W = sum_ezz.llt().solve(cross.transpose()).transpose();
  // Noiseless data drives the residual to zero; floor it relative to the scatter.
  const double scatter = (X.colwise() - X.rowwise().mean()).squaredNorm();
  const double residual = std::max(expected_residual_sq(next, moments, X), 1e-14 * scatter);
  next.a = n * static_cast<double>(X.rows()) / residual;
  return next;
}

EmResult centralized_em(const Eigen::MatrixXd& X, const PpcaParams& init, int iterations) {
  init.validate();
  if (X.cols() <= init.latent_dim()) throw std::invalid_argument("centralized_em: need more samples than M");
  const Eigen::VectorXd mean = X.rowwise().mean();
  if ((X.colwise() - mean).squaredNorm() <= 1e-300)
    throw std::invalid_argument("centralized_em: data has zero variance");
  EmResult result{init, {-negative_log_likelihood(init, X)}};
  for (int it = 0; it < iterations; ++it) {
    result.params = centralized_em_step(result.params, X);
    result.log_likelihood.push_back(-negative_log_likelihood(result.params, X));
  }
  return result;
}

PpcaParams random_init(const Eigen::MatrixXd& X, Eigen::Index latent_dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  PpcaParams p;
  p.W.resize(X.rows(), latent_dim);
  for (Eigen::Index c = 0; c < p.W.cols(); ++c)
    for (Eigen::Index r = 0; r < p.W.rows(); ++r) p.W(r, c) = scale * normal(rng);
  p.mu = X.rowwise().mean();
  p.a = 1.0;
  return p;
}

DppcaMultipliers DppcaMultipliers::zeros(Eigen::Index D, Eigen::Index M) {
  return {Eigen::MatrixXd::Zero(D, M), Eigen::VectorXd::Zero(D), 0.0};
}

namespace {

// Positive root of A a^2 + B a - C = 0 with A >= 0, C > 0, written to avoid
// cancellation. Returns NaN when no positive root exists (A = 0, B <= 0).
double positive_root(double A, double B, double C) {
  if (A > 0.0) {
    const double disc = std::sqrt(B * B + 4.0 * A * C);
    return B >= 0.0 ? 2.0 * C / (B + disc) : (disc - B) / (2.0 * A);
  }
  return B > 0.0 ? C / B : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

PpcaParams dppca_m_step(const LatentMoments& moments, const Eigen::MatrixXd& X, const PpcaParams& own,
                        const DppcaMultipliers& mult, std::span<const PpcaParams> neighbors,
                        std::span<const double> eta, MStepDiagnostics* diagnostics) {
  if (neighbors.size() != eta.size()) throw std::invalid_argument("dppca_m_step: one eta per neighbor");
  const Eigen::Index D = own.ambient_dim();
  const Eigen::Index M = own.latent_dim();
  const auto n = static_cast<double>(X.cols());

  double eta_sum = 0.0;
  Eigen::VectorXd mu_anchor = Eigen::VectorXd::Zero(D);
  Eigen::MatrixXd W_anchor = Eigen::MatrixXd::Zero(D, M);
  double a_anchor = 0.0;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    eta_sum += eta[k];
    mu_anchor += eta[k] * (own.mu + neighbors[k].mu);
    W_anchor += eta[k] * (own.W + neighbors[k].W);
    a_anchor += eta[k] * (own.a + neighbors[k].a);
  }

  PpcaParams next;
  next.mu = (own.a * (X - own.W * moments.Ez).rowwise().sum() - 2.0 * mult.gamma + mu_anchor) /
            (n * own.a + 2.0 * eta_sum);

  const Eigen::MatrixXd lhs =
      own.a * moments.sum_ezz() + 2.0 * eta_sum * Eigen::MatrixXd::Identity(M, M);
  const Eigen::MatrixXd rhs =
      own.a * (X.colwise() - next.mu) * moments.Ez.transpose() - 2.0 * mult.lambda + W_anchor;
  Eigen::LLT<Eigen::MatrixXd> llt(lhs);
  if (llt.info() != Eigen::Success) {
    const double ridge = 1e-10 * std::max(1.0, lhs.trace() / static_cast<double>(M));
    llt.compute(lhs + ridge * Eigen::MatrixXd::Identity(M, M));
    if (diagnostics) ++diagnostics->regularized_solves;
  }
  next.W = llt.solve(rhs.transpose()).transpose();

  const double residual_sq = expected_residual_sq(next, moments, X);
  const double nd_half = 0.5 * n * static_cast<double>(D);
  next.a = positive_root(2.0 * eta_sum, 0.5 * residual_sq + 2.0 * mult.beta - a_anchor, nd_half);
  if (!(next.a > 0.0) || !std::isfinite(next.a)) {
    next.a = nd_half / (0.5 * residual_sq);
    if (diagnostics) ++diagnostics->precision_fallbacks;
  }
  return next;
}

DppcaMultipliers dppca_multiplier_step(const PpcaParams& own, std::span<const PpcaParams> neighbors,
                                       std::span<const double> eta, const DppcaMultipliers& mult) {
  if (neighbors.size() != eta.size()) throw std::invalid_argument("dppca_multiplier_step: one eta per neighbor");
  DppcaMultipliers next = mult;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    const double half_eta = 0.5 * eta[k];
    next.gamma += half_eta * (own.mu - neighbors[k].mu);
    next.lambda += half_eta * (own.W - neighbors[k].W);
    next.beta += half_eta * (own.a - neighbors[k].a);
  }
  return next;
}

DppcaNodeModel::DppcaNodeModel(Eigen::MatrixXd X, PpcaParams init, bool center_samples)
    : X_(std::move(X)), params_(std::move(init)) {
  params_.validate();
  if (X_.rows() != params_.ambient_dim()) throw std::invalid_argument("DppcaNodeModel: data rows must equal D");
  if (X_.cols() < 1) throw std::invalid_argument("DppcaNodeModel: empty shard");
  if (center_samples) X_.rowwise() -= X_.colwise().mean();
  multipliers_ = DppcaMultipliers::zeros(params_.ambient_dim(), params_.latent_dim());
}

double DppcaNodeModel::local_objective(const Eigen::VectorXd& theta) const {
  return negative_log_likelihood(unflatten(theta, params_.ambient_dim(), params_.latent_dim()), X_);
}

std::vector<PpcaParams> DppcaNodeModel::unpack(const NeighborView& inbox) const {
  std::vector<PpcaParams> out;
  out.reserve(inbox.params.size());
  for (const auto& theta : inbox.params)
    out.push_back(unflatten(theta, params_.ambient_dim(), params_.latent_dim()));
  return out;
}

void DppcaNodeModel::local_step(const NeighborView& inbox) {
  const auto neighbors = unpack(inbox);
  const LatentMoments moments = e_step(params_, X_);
  params_ = dppca_m_step(moments, X_, params_, multipliers_, neighbors, inbox.eta, &diagnostics_);
}

void DppcaNodeModel::multiplier_step(const NeighborView& inbox) {
  multipliers_ = dppca_multiplier_step(params_, unpack(inbox), inbox.eta, multipliers_);
}

}  // namespace netadmm
