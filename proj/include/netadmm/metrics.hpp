#pragma once

#include "netadmm/engine.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace netadmm {

// Largest principal angle between span(A) and span(B), in degrees, within
// [0, 90]. Throws std::invalid_argument on rank-deficient or mismatched input.
double subspace_angle_deg(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct SubspaceAngleReport {
  std::vector<double> per_node_angle_deg;
  double max_angle_deg = 0.0;
};

SubspaceAngleReport subspace_angles(std::span<const Eigen::MatrixXd> node_bases, const Eigen::MatrixXd& reference);

struct RunSummary {
  int iterations = 0;       // first converged iteration (1-based count), else max_iterations
  bool converged = false;
  double max_angle_deg = 0.0;
  std::uint64_t seed = 0;
};

RunSummary run_report(std::span<const IterationRecord> records, int max_iterations,
                      std::span<const Eigen::MatrixXd> node_bases, const Eigen::MatrixXd& reference,
                      std::uint64_t seed);

// Lower median: element (n - 1) / 2 of the sorted values.
double lower_median(std::vector<double> values);

struct BatchSummary {
  double median_iterations = 0.0;
  double median_angle_deg = 0.0;
  std::size_t runs = 0;
  std::size_t converged_runs = 0;
  std::size_t filtered_runs = 0;  // dropped by the angle filter
};

// Runs whose max angle exceeds angle_filter_deg are excluded from the medians.
BatchSummary summarize_batch(std::span<const RunSummary> runs,
                             double angle_filter_deg = std::numeric_limits<double>::infinity());

// 100 (baseline - candidate) / baseline.
double speedup_percent(double baseline_iters, double candidate_iters);

// Top right singular vectors (N x rank) of the row-centered measurement
// matrix: the centralized affine structure-from-motion reference.
Eigen::MatrixXd svd_structure_basis(const Eigen::MatrixXd& measurements, Eigen::Index rank);

}  // namespace netadmm
