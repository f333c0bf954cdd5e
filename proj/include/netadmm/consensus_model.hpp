#pragma once

#include <Eigen/Core>

#include <span>

namespace netadmm {

// What a node sees of its neighborhood during a phase. Both spans are
// parallel to the node's neighbor list.
struct NeighborView {
  std::span<const Eigen::VectorXd> params;  // last broadcast of each neighbor
  std::span<const double> eta;              // penalty of each outgoing edge
};

// One node's share of a consensus problem: a local objective f_i over a flat
// parameter vector plus the primal and dual steps of consensus ADMM with
// per-edge penalties. The engine owns scheduling; a model only touches its
// own state.
class ConsensusModel {
 public:
  virtual ~ConsensusModel() = default;

  // Current parameters, flattened.
  virtual Eigen::VectorXd parameters() const = 0;

  // f_i evaluated on this node's data at an arbitrary flat parameter vector.
  virtual double local_objective(const Eigen::VectorXd& theta) const = 0;

  // Minimizes (or does not increase) the node's augmented Lagrangian over
  // its own parameters, given the neighbors' previous broadcasts.
  virtual void local_step(const NeighborView& inbox) = 0;

  // Dual ascent on the node's multipliers using the current broadcasts.
  virtual void multiplier_step(const NeighborView& inbox) = 0;
};

}  // namespace netadmm
