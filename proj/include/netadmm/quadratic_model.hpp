#pragma once

#include "netadmm/consensus_model.hpp"

namespace netadmm {

// f_i(theta) = ||theta - c_i||^2. The consensus optimum is mean(c_i), which
// makes this the analytic oracle for the engine.
class QuadraticConsensusModel final : public ConsensusModel {
 public:
  QuadraticConsensusModel(Eigen::VectorXd center, Eigen::VectorXd initial);

  Eigen::VectorXd parameters() const override { return theta_; }
  double local_objective(const Eigen::VectorXd& theta) const override;
  void local_step(const NeighborView& inbox) override;
  void multiplier_step(const NeighborView& inbox) override;

  const Eigen::VectorXd& multiplier() const { return lambda_; }

 private:
  Eigen::VectorXd center_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd lambda_;
};

}  // namespace netadmm
