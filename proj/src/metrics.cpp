#include "netadmm/metrics.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace netadmm {

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& A) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(A);
  pivoted.setThreshold(1e-12);
  if (pivoted.rank() < A.cols()) throw std::invalid_argument("subspace_angle: rank-deficient basis");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
}

}  // namespace

double subspace_angle_deg(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.cols() < 1)
    throw std::invalid_argument("subspace_angle: bases must have identical, non-empty shapes");
  if (!A.allFinite() || !B.allFinite()) throw std::invalid_argument("subspace_angle: non-finite basis");
  const Eigen::MatrixXd QA = orthonormal_basis(A);
  const Eigen::MatrixXd QB = orthonormal_basis(B);
  const Eigen::MatrixXd cross = QA.transpose() * QB;

  // The sine route is accurate for small angles where arccos loses digits.
  const Eigen::MatrixXd residual = QB - QA * cross;
  const double sin_max = std::min(1.0, Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()(0));
  double radians;
  if (sin_max < std::numbers::sqrt2 / 2.0) {
    radians = std::asin(sin_max);
  } else {
    const double cos_min = Eigen::JacobiSVD<Eigen::MatrixXd>(cross).singularValues().minCoeff();
    radians = std::acos(std::clamp(cos_min, -1.0, 1.0));
  }
  return std::clamp(radians * 180.0 / std::numbers::pi, 0.0, 90.0);
}

SubspaceAngleReport subspace_angles(std::span<const Eigen::MatrixXd> node_bases, const Eigen::MatrixXd& reference) {
  SubspaceAngleReport report;
  for (const auto& W : node_bases) {
    report.per_node_angle_deg.push_back(subspace_angle_deg(W, reference));
    report.max_angle_deg = std::max(report.max_angle_deg, report.per_node_angle_deg.back());
  }
  return report;
}

RunSummary run_report(std::span<const IterationRecord> records, int max_iterations,
                      std::span<const Eigen::MatrixXd> node_bases, const Eigen::MatrixXd& reference,
                      std::uint64_t seed) {
  RunSummary s;
  s.seed = seed;
  s.iterations = max_iterations;
  const auto hit = std::find_if(records.begin(), records.end(), [](const auto& r) { return r.converged; });
  if (hit != records.end()) {
    s.converged = true;
    s.iterations = hit->t + 1;
  }
  s.max_angle_deg = subspace_angles(node_bases, reference).max_angle_deg;
  return s;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("lower_median: empty input");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

BatchSummary summarize_batch(std::span<const RunSummary> runs, double angle_filter_deg) {
  BatchSummary b;
  b.runs = runs.size();
  std::vector<double> iters;
  std::vector<double> angles;
  for (const auto& r : runs) {
    if (r.converged) ++b.converged_runs;
    if (r.max_angle_deg > angle_filter_deg) {
      ++b.filtered_runs;
      continue;
    }
    iters.push_back(r.iterations);
    angles.push_back(r.max_angle_deg);
  }
  if (!iters.empty()) {
    b.median_iterations = lower_median(iters);
    b.median_angle_deg = lower_median(angles);
  }
  return b;
}

double speedup_percent(double baseline_iters, double candidate_iters) {
  if (!(baseline_iters > 0.0)) throw std::invalid_argument("speedup: baseline must be > 0");
  return 100.0 * (baseline_iters - candidate_iters) / baseline_iters;
}

Eigen::MatrixXd svd_structure_basis(const Eigen::MatrixXd& measurements, Eigen::Index rank) {
  if (rank < 1 || rank > std::min(measurements.rows(), measurements.cols()))
    throw std::invalid_argument("svd_structure_basis: rank out of range");
  const Eigen::MatrixXd centered = measurements.colwise() - measurements.rowwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  return svd.matrixV().leftCols(rank);
}

}  // namespace netadmm
