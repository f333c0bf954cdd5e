#include "netadmm/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>

namespace netadmm {

namespace {

constexpr double kDivisionGuard = 1e-12;

// Runs fn(i) for every node. Each call may only write node-i slots; any
// cross-node reduction happens afterwards in node order.
template <class Fn>
void for_each_node(std::size_t n, const EngineConfig& cfg, Fn&& fn) {
  if (cfg.execution == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int threads = cfg.num_threads > 0 ? cfg.num_threads : omp_get_max_threads();
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct NodeSignals {
  std::vector<double> taus;
  ResidualPair residuals;
  double f_curr = 0.0;
  double f_prev = 0.0;
};

}  // namespace

EdgeCoupling parse_edge_coupling(std::string_view name) {
  if (name == "symmetric") return EdgeCoupling::symmetric;
  if (name == "directed") return EdgeCoupling::directed;
  throw std::invalid_argument("unknown edge coupling '" + std::string(name) + "'");
}

std::string_view to_string(EdgeCoupling coupling) {
  return coupling == EdgeCoupling::symmetric ? "symmetric" : "directed";
}

void EngineConfig::validate() const {
  penalty.validate();
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be > 0");
  if (!(divergence_factor > 1.0)) throw std::invalid_argument("divergence_factor must be > 1");
}

bool convergence_check(std::span<const double> history, double tol) {
  if (history.size() < 2) return false;
  const double curr = history[history.size() - 1];
  const double prev = history[history.size() - 2];
  return std::abs(curr - prev) / (std::abs(prev) + kDivisionGuard) < tol;
}

std::vector<std::vector<Eigen::VectorXd>> broadcast_round(const Graph& graph,
                                                          std::span<const Eigen::VectorXd> snapshots) {
  if (snapshots.size() != graph.num_nodes())
    throw std::invalid_argument("broadcast_round: one snapshot per node required");
  std::vector<std::vector<Eigen::VectorXd>> inbox(graph.num_nodes());
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    inbox[i].reserve(graph.degree(i));
    for (NodeId j : graph.neighbors(i)) inbox[i].push_back(snapshots[j]);
  }
  return inbox;
}

RunResult run(const Graph& graph, const EngineConfig& config, std::vector<ModelPtr>& nodes,
              const IterationObserver& observer) {
  config.validate();
  const std::size_t n = graph.num_nodes();
  if (nodes.size() != n) throw std::invalid_argument("run: one model per graph node required");
  for (const auto& m : nodes)
    if (!m) throw std::invalid_argument("run: null model");

  const PenaltyConfig& pcfg = config.penalty;
  std::vector<NodePenalty> penalties;
  penalties.reserve(n);
  for (NodeId i = 0; i < n; ++i) penalties.emplace_back(config.scheme, pcfg, graph.degree(i));

  std::vector<Eigen::VectorXd> snapshots(n);
  for (NodeId i = 0; i < n; ++i) snapshots[i] = nodes[i]->parameters();
  auto inbox = broadcast_round(graph, snapshots);

  std::vector<NodeSignals> signals(n);
  for_each_node(n, config, [&](std::size_t i) {
    signals[i].f_prev = nodes[i]->local_objective(snapshots[i]);
    signals[i].taus.assign(graph.degree(i), 0.0);
  });

  RunResult result;
  for (const auto& s : signals) result.initial_objective += s.f_prev;
  if (!std::isfinite(result.initial_objective))
    throw DivergedError("initial objective is not finite", IterationRecord{});
  std::vector<double> history{result.initial_objective};

  // reverse[i][k] = position of i in the neighbor list of its k-th neighbor
  std::vector<std::vector<std::size_t>> reverse(n);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : graph.neighbors(i)) {
      const auto& back = graph.neighbors(j);
      reverse[i].push_back(static_cast<std::size_t>(std::find(back.begin(), back.end(), i) - back.begin()));
    }
  }

  std::vector<std::vector<double>> etas(n);
  std::vector<Eigen::VectorXd> prev_avg(n);
  std::vector<Eigen::VectorXd> curr_avg(n);

  for (int t = 0; t < config.max_iterations; ++t) {
    // (1) local primal steps against last round's broadcasts.
    for_each_node(n, config, [&](std::size_t i) {
      const auto nbrs = graph.neighbors(i);
      etas[i].resize(penalties[i].degree());
      for (std::size_t k = 0; k < etas[i].size(); ++k) {
        etas[i][k] = penalties[i].eta(k);
        if (config.coupling == EdgeCoupling::symmetric)
          etas[i][k] = 0.5 * (etas[i][k] + penalties[nbrs[k]].eta(reverse[i][k]));
      }
      nodes[i]->local_step({inbox[i], etas[i]});
    });

    // (2) broadcast.
    for_each_node(n, config, [&](std::size_t i) { snapshots[i] = nodes[i]->parameters(); });
    inbox = broadcast_round(graph, snapshots);

    // (3) multipliers, still under this round's penalties.
    for_each_node(n, config, [&](std::size_t i) { nodes[i]->multiplier_step({inbox[i], etas[i]}); });

    // (4) penalty update from residuals and objective rankings.
    for_each_node(n, config, [&](std::size_t i) {
      NodeSignals& sig = signals[i];
      const ConsensusModel& model = *nodes[i];
      const Eigen::VectorXd& own = snapshots[i];
      sig.f_curr = model.local_objective(own);

      if (inbox[i].empty()) {
        curr_avg[i] = own;
      } else {
        curr_avg[i] = Eigen::VectorXd::Zero(own.size());
        for (const auto& theta : inbox[i]) curr_avg[i] += theta;
        curr_avg[i] /= static_cast<double>(inbox[i].size());
      }
      if (t == 0) prev_avg[i] = curr_avg[i];
      sig.residuals = local_residuals(own, curr_avg[i], prev_avg[i], penalties[i].node_eta());
      prev_avg[i] = curr_avg[i];

      if (uses_taus(config.scheme)) {
        std::vector<double> f_neighbors(inbox[i].size());
        for (std::size_t k = 0; k < inbox[i].size(); ++k) {
          if (pcfg.eval_point == EvalPoint::neighbor)
            f_neighbors[k] = model.local_objective(inbox[i][k]);
          else
            f_neighbors[k] = model.local_objective(0.5 * (own + inbox[i][k]));
        }
        sig.taus = ap_taus(sig.f_curr, f_neighbors, pcfg.f_tie_epsilon);
      }
      penalties[i].update_eta({sig.residuals, sig.taus, sig.f_curr, sig.f_prev, t});
    });

    // (5) budget ceilings.
    for_each_node(n, config, [&](std::size_t i) {
      NodeSignals& sig = signals[i];
      penalties[i].update_budget({sig.residuals, sig.taus, sig.f_curr, sig.f_prev, t});
      sig.f_prev = sig.f_curr;
    });

    // (6) record and convergence, reduced in node order.
    IterationRecord rec;
    rec.t = t;
    double eta_sum = 0.0;
    std::size_t eta_count = 0;
    rec.eta_min = std::numeric_limits<double>::infinity();
    rec.eta_max = -std::numeric_limits<double>::infinity();
    for (NodeId i = 0; i < n; ++i) {
      rec.objective += signals[i].f_curr;
      rec.max_primal = std::max(rec.max_primal, std::sqrt(signals[i].residuals.primal_sq));
      rec.max_dual = std::max(rec.max_dual, std::sqrt(signals[i].residuals.dual_sq));
      rec.exhausted_edges += penalties[i].exhausted_edges();
      for (const auto& e : penalties[i].edges()) {
        rec.eta_min = std::min(rec.eta_min, e.eta);
        rec.eta_max = std::max(rec.eta_max, e.eta);
        eta_sum += e.eta;
        ++eta_count;
        if (uses_budget(config.scheme)) rec.max_ceiling = std::max(rec.max_ceiling, e.ceiling);
      }
    }
    if (eta_count == 0) {
      rec.eta_min = rec.eta_max = rec.eta_mean = 0.0;
    } else {
      rec.eta_mean = eta_sum / static_cast<double>(eta_count);
    }
    history.push_back(rec.objective);
    rec.converged = convergence_check(history, config.convergence_tol);

    const double scale = std::max(std::abs(result.initial_objective), 1.0);
    if (!std::isfinite(rec.objective) || std::abs(rec.objective) > config.divergence_factor * scale)
      throw DivergedError("global objective diverged at iteration " + std::to_string(t), rec);

    result.records.push_back(rec);
    if (observer) observer(RoundView{graph, nodes, penalties, snapshots, result.records.back()});
    if (rec.converged) break;
  }

  result.iterations = static_cast<int>(result.records.size());
  result.converged = !result.records.empty() && result.records.back().converged;
  result.final_parameters = std::move(snapshots);
  result.final_penalties = std::move(penalties);
  return result;
}

RunResult run(const Graph& graph, const EngineConfig& config, const ModelFactory& factory,
              const IterationObserver& observer) {
  std::vector<ModelPtr> nodes;
  nodes.reserve(graph.num_nodes());
  for (NodeId i = 0; i < graph.num_nodes(); ++i) nodes.push_back(factory(i));
  return run(graph, config, nodes, observer);
}

void write_trace_csv(std::ostream& out, std::span<const IterationRecord> records) {
  const auto old_precision = out.precision(12);
  out << "t,objective,max_primal,max_dual,eta_min,eta_max,eta_mean,converged\n";
  for (const auto& r : records) {
    out << r.t << ',' << r.objective << ',' << r.max_primal << ',' << r.max_dual << ',' << r.eta_min << ','
        << r.eta_max << ',' << r.eta_mean << ',' << (r.converged ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace netadmm
