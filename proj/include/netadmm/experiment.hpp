#pragma once

#include "netadmm/data.hpp"
#include "netadmm/engine.hpp"
#include "netadmm/metrics.hpp"
#include "netadmm/ppca.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace netadmm {

enum class Command { run, sweep, sfm };

struct SweepSpec {
  std::vector<Scheme> schemes;
  std::vector<std::string> topologies;
  std::vector<std::size_t> nodes;
  std::vector<std::uint64_t> seeds;
  double angle_filter_deg = std::numeric_limits<double>::infinity();
};

struct ExperimentConfig {
  Scheme scheme = Scheme::fixed;
  std::string topology = "complete";
  std::size_t nodes = 20;
  std::uint64_t seed = 1;  // drives parameter initialization
  int max_iterations = 1000;
  double convergence_tol = 1e-3;
  Execution execution = Execution::serial;
  EdgeCoupling coupling = EdgeCoupling::symmetric;
  int threads = 0;
  PenaltyConfig penalty;
  Eigen::Index latent_dim = 5;
  std::string init = "random";
  SyntheticSpec synthetic;  // latent_dim mirrors the field above
  std::string measurements;  // sfm input; empty selects a generated scene
  SfmSpec sfm;
  std::string output_dir = "netadmm_out";
  SweepSpec sweep;

  static ExperimentConfig defaults(Command command);

  // Overlays the keys present in `doc`; unknown keys throw.
  void apply_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  // Throws std::invalid_argument naming the offending field.
  void validate(Command command) const;

  EngineConfig engine_config() const;
};

struct CellResult {
  RunResult run;
  RunSummary summary;
  SubspaceAngleReport angles;
  MStepDiagnostics diagnostics;
  nlohmann::json summary_json;
};

// One D-PPCA run on evenly partitioned columns; angles against `reference`.
CellResult run_dppca_cell(const ExperimentConfig& cfg, const Eigen::MatrixXd& data,
                          const Eigen::MatrixXd& reference, const IterationObserver& observer = {});

// One D-PPCA structure-from-motion run: frames split across nodes, each
// sample centered locally, angles against the centralized rank-3 SVD basis.
CellResult run_sfm_cell(const ExperimentConfig& cfg, const MeasurementMatrix& measurements,
                        const IterationObserver& observer = {});

// Writes trace.csv and summary.json into dir via temp-file + rename.
void write_cell_artifacts(const std::filesystem::path& dir, const CellResult& cell);

// Exit codes: 0 converged, 2 hit max_iterations, 1 error.
int cmd_run(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sfm(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace netadmm
