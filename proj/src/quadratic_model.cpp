#include "netadmm/quadratic_model.hpp"

#include <stdexcept>

namespace netadmm {

QuadraticConsensusModel::QuadraticConsensusModel(Eigen::VectorXd center, Eigen::VectorXd initial)
    : center_(std::move(center)), theta_(std::move(initial)), lambda_(Eigen::VectorXd::Zero(center_.size())) {
  if (center_.size() != theta_.size()) throw std::invalid_argument("center and initial differ in size");
}

double QuadraticConsensusModel::local_objective(const Eigen::VectorXd& theta) const {
  return (theta - center_).squaredNorm();
}

// argmin ||theta - c||^2 + 2 lambda'theta + sum_j eta_j ||theta - (theta_i + theta_j)/2||^2
void QuadraticConsensusModel::local_step(const NeighborView& inbox) {
  Eigen::VectorXd rhs = 2.0 * (center_ - lambda_);
  double denom = 2.0;
  for (std::size_t k = 0; k < inbox.params.size(); ++k) {
    rhs += inbox.eta[k] * (theta_ + inbox.params[k]);
    denom += 2.0 * inbox.eta[k];
  }
  theta_ = rhs / denom;
}

void QuadraticConsensusModel::multiplier_step(const NeighborView& inbox) {
  for (std::size_t k = 0; k < inbox.params.size(); ++k)
    lambda_ += 0.5 * inbox.eta[k] * (theta_ - inbox.params[k]);
}

}  // namespace netadmm
