#pragma once

#include "netadmm/consensus_model.hpp"
#include "netadmm/penalty.hpp"
#include "netadmm/topology.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace netadmm {

// serial is the reference path; parallel runs each node phase as an OpenMP
// loop and must reproduce serial bit for bit.
enum class Execution { serial, parallel };

// How the two directed penalties of an edge reach the models. symmetric hands
// both endpoints (eta_ij + eta_ji) / 2, which keeps the multipliers summing to
// zero; directed hands node i its own eta_ij unchanged.
enum class EdgeCoupling { symmetric, directed };

EdgeCoupling parse_edge_coupling(std::string_view name);
std::string_view to_string(EdgeCoupling coupling);

struct EngineConfig {
  Scheme scheme = Scheme::fixed;
  PenaltyConfig penalty;
  int max_iterations = 1000;
  double convergence_tol = 1e-3;
  Execution execution = Execution::serial;
  EdgeCoupling coupling = EdgeCoupling::symmetric;
  int num_threads = 0;               // 0 = OpenMP default
  double divergence_factor = 1e12;   // abort once |f| exceeds this times |f_initial|

  void validate() const;
};

struct IterationRecord {
  int t = 0;
  double objective = 0.0;   // sum_i f_i(theta_i)
  double max_primal = 0.0;  // max_i ||r_i||
  double max_dual = 0.0;    // max_i ||s_i||
  double eta_min = 0.0;
  double eta_max = 0.0;
  double eta_mean = 0.0;
  bool converged = false;
  std::size_t exhausted_edges = 0;  // budget schemes only
  double max_ceiling = 0.0;         // budget schemes only
};

class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, IterationRecord last)
      : std::runtime_error(what), last_(last) {}
  const IterationRecord& last_record() const { return last_; }

 private:
  IterationRecord last_;
};

using ModelPtr = std::unique_ptr<ConsensusModel>;
using ModelFactory = std::function<ModelPtr(NodeId)>;

// Read-only view of the simulation after a completed round.
struct RoundView {
  const Graph& graph;
  std::span<const ModelPtr> nodes;
  std::span<const NodePenalty> penalties;  // state after this round's updates
  std::span<const Eigen::VectorXd> broadcast;
  const IterationRecord& record;
};

using IterationObserver = std::function<void(const RoundView&)>;

struct RunResult {
  std::vector<IterationRecord> records;
  std::vector<Eigen::VectorXd> final_parameters;
  std::vector<NodePenalty> final_penalties;
  double initial_objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

// True iff |f_t - f_{t-1}| / (|f_{t-1}| + 1e-12) < tol; false with fewer
// than two entries.
bool convergence_check(std::span<const double> objective_history, double tol);

// inbox[i][k] = snapshot of the k-th neighbor of i.
std::vector<std::vector<Eigen::VectorXd>> broadcast_round(const Graph& graph,
                                                          std::span<const Eigen::VectorXd> snapshots);

// Round-synchronous consensus ADMM. Every round runs, barrier-separated:
// local steps, broadcast, multiplier steps, penalty update, budget update,
// then record and convergence check. Throws DivergedError when the global
// objective becomes non-finite or explodes.
RunResult run(const Graph& graph, const EngineConfig& config, std::vector<ModelPtr>& nodes,
              const IterationObserver& observer = {});

RunResult run(const Graph& graph, const EngineConfig& config, const ModelFactory& factory,
              const IterationObserver& observer = {});

// t,objective,max_primal,max_dual,eta_min,eta_max,eta_mean,converged
void write_trace_csv(std::ostream& out, std::span<const IterationRecord> records);

}  // namespace netadmm
