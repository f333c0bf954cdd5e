#pragma once

#include "netadmm/consensus_model.hpp"

#include <Eigen/Core>

#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace netadmm {

// x = W z + mu + eps, z ~ N(0, I_M), eps ~ N(0, a^{-1} I_D).
struct PpcaParams {
  Eigen::MatrixXd W;   // D x M
  Eigen::VectorXd mu;  // D
  double a = 1.0;      // noise precision

  Eigen::Index ambient_dim() const { return W.rows(); }
  Eigen::Index latent_dim() const { return W.cols(); }
  void validate() const;
};

// Flat layout vec(W) (column-major), then mu, then a.
Eigen::VectorXd flatten(const PpcaParams& p);
PpcaParams unflatten(const Eigen::VectorXd& theta, Eigen::Index ambient_dim, Eigen::Index latent_dim);

class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Posterior moments of the latent variables for one data shard. The
// posterior covariance is shared by all samples.
struct LatentMoments {
  Eigen::MatrixXd Ez;   // M x N, column n = E[z_n]
  Eigen::MatrixXd cov;  // M x M, a^{-1} (W'W + a^{-1} I)^{-1}

  Eigen::Index count() const { return Ez.cols(); }
  Eigen::MatrixXd ezz(Eigen::Index n) const { return cov + Ez.col(n) * Ez.col(n).transpose(); }
  Eigen::MatrixXd sum_ezz() const { return static_cast<double>(count()) * cov + Ez * Ez.transpose(); }
};

LatentMoments e_step(const PpcaParams& params, const Eigen::MatrixXd& X);

// -log N(X | mu, W W' + a^{-1} I), summed over columns.
double negative_log_likelihood(const PpcaParams& params, const Eigen::MatrixXd& X);

// sum_n E||x_n - W z_n - mu||^2 under the given moments.
double expected_residual_sq(const PpcaParams& params, const LatentMoments& moments, const Eigen::MatrixXd& X);

// One EM iteration in conditional-maximization order: mu, then W, then a.
PpcaParams centralized_em_step(const PpcaParams& params, const Eigen::MatrixXd& X);

struct EmResult {
  PpcaParams params;
  std::vector<double> log_likelihood;  // entry 0 at init, then one per iteration
};

// Rejects N <= M and zero-variance data with std::invalid_argument.
EmResult centralized_em(const Eigen::MatrixXd& X, const PpcaParams& init, int iterations);

// W_ij ~ N(0, 1/M), mu = column mean of X, a = 1.
PpcaParams random_init(const Eigen::MatrixXd& X, Eigen::Index latent_dim, std::mt19937_64& rng);

struct DppcaMultipliers {
  Eigen::MatrixXd lambda;  // for W
  Eigen::VectorXd gamma;   // for mu
  double beta = 0.0;       // for a

  static DppcaMultipliers zeros(Eigen::Index ambient_dim, Eigen::Index latent_dim);
};

struct MStepDiagnostics {
  int regularized_solves = 0;
  int precision_fallbacks = 0;
};

// Minimizes the node's penalized expected complete-data objective
//   Q_i(mu, W, a) + 2 gamma'mu + 2 tr(lambda'W) + 2 beta a
//   + sum_j eta_j (||mu - (mu_i + mu_j)/2||^2 + ||W - (W_i + W_j)/2||_F^2 + (a - (a_i + a_j)/2)^2)
// block by block: mu, then W, then a, each using the freshest other blocks.
PpcaParams dppca_m_step(const LatentMoments& moments, const Eigen::MatrixXd& X, const PpcaParams& own,
                        const DppcaMultipliers& multipliers, std::span<const PpcaParams> neighbors,
                        std::span<const double> eta, MStepDiagnostics* diagnostics = nullptr);

// gamma += 1/2 sum_j eta_j (mu_i - mu_j); lambda and beta likewise.
DppcaMultipliers dppca_multiplier_step(const PpcaParams& own, std::span<const PpcaParams> neighbors,
                                       std::span<const double> eta, const DppcaMultipliers& multipliers);

// ConsensusModel adapter for one D-PPCA node.
class DppcaNodeModel final : public ConsensusModel {
 public:
  // center_samples subtracts each column's own mean from the shard (affine
  // structure-from-motion mode: removes per-row translation locally).
  DppcaNodeModel(Eigen::MatrixXd X, PpcaParams init, bool center_samples = false);

  Eigen::VectorXd parameters() const override { return flatten(params_); }
  double local_objective(const Eigen::VectorXd& theta) const override;
  void local_step(const NeighborView& inbox) override;
  void multiplier_step(const NeighborView& inbox) override;

  const PpcaParams& params() const { return params_; }
  const DppcaMultipliers& multipliers() const { return multipliers_; }
  const Eigen::MatrixXd& data() const { return X_; }
  const MStepDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  std::vector<PpcaParams> unpack(const NeighborView& inbox) const;

  Eigen::MatrixXd X_;
  PpcaParams params_;
  DppcaMultipliers multipliers_;
  MStepDiagnostics diagnostics_;
};

}  // namespace netadmm
