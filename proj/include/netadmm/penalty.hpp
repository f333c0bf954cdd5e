#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string_view>
#include <array>
#include <vector>

namespace netadmm {

enum class Scheme { fixed, vp, ap, nap, vp_ap, vp_nap };

inline constexpr std::array<Scheme, 6> all_schemes() {
  return {Scheme::fixed, Scheme::vp, Scheme::ap, Scheme::nap, Scheme::vp_ap, Scheme::vp_nap};
}

Scheme parse_scheme(std::string_view name);
std::string_view to_string(Scheme scheme);

bool uses_residuals(Scheme scheme);
bool uses_taus(Scheme scheme);
bool uses_budget(Scheme scheme);

// Where node i evaluates its own objective when ranking neighbor j.
enum class EvalPoint { neighbor, midpoint };

EvalPoint parse_eval_point(std::string_view name);
std::string_view to_string(EvalPoint point);

struct PenaltyConfig {
  double eta0 = 10.0;
  double mu = 10.0;         // residual-ratio threshold, > 1
  double tau_fixed = 1.0;   // multiplicative step of the residual-balancing rule
  int t_max = 50;           // last iteration with adaptive updates (AP, VP+AP)
  int t_reset = 50;         // VP resets to eta0 from this iteration on
  double budget_T = 1.0;    // initial per-edge budget ceiling
  double alpha = 0.5;       // ceiling growth ratio, in (0, 1)
  double beta = 0.1;        // objective-change threshold for ceiling growth, in (0, 1)
  double f_tie_epsilon = 1e-12;
  bool relative_beta = true;
  EvalPoint eval_point = EvalPoint::neighbor;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  // Supremum of any edge's budget ceiling: budget_T / (1 - alpha).
  double ceiling_bound() const { return budget_T / (1.0 - alpha); }
};

struct EdgePenaltyState {
  double eta = 10.0;
  double spent = 0.0;     // sum of |tau| paid so far
  double ceiling = 1.0;
  int growth_count = 1;   // exponent n of the next ceiling increment alpha^n * T

  static EdgePenaltyState initial(const PenaltyConfig& cfg) {
    return {cfg.eta0, 0.0, cfg.budget_T, 1};
  }
  bool exhausted() const { return spent >= ceiling; }
};

struct ResidualPair {
  double primal_sq = 0.0;
  double dual_sq = 0.0;
};

// primal = ||theta_i - avg||^2, dual = eta_i^2 ||avg - avg_prev||^2.
ResidualPair local_residuals(const Eigen::Ref<const Eigen::VectorXd>& theta_i,
                             const Eigen::Ref<const Eigen::VectorXd>& neighbor_avg,
                             const Eigen::Ref<const Eigen::VectorXd>& neighbor_avg_prev,
                             double eta_i);

enum class ResidualBalance { increase, decrease, hold };

// increase when ||r|| > mu ||s||, decrease when ||s|| > mu ||r||.
ResidualBalance residual_balance(const ResidualPair& res, double mu);

// Localized residual balancing for a per-node penalty eta_i.
double vp_update(double eta_i, const ResidualPair& res, const PenaltyConfig& cfg, int t);

// Objective-ranking weights for each neighbor, in neighbor-list order.
// tau_j = kappa(theta_i) / kappa(theta_j) - 1 with kappa normalized over
// {f_self} U f_neighbors. All zero when the spread is within tie_epsilon.
std::vector<double> ap_taus(double f_self, std::span<const double> f_neighbors, double tie_epsilon);

double ap_update(double tau, const PenaltyConfig& cfg, int t);

// Whether the objective moved by more than beta (relative or absolute per cfg).
bool objective_changed(double f_curr, double f_prev, const PenaltyConfig& cfg);

EdgePenaltyState nap_eta_step(EdgePenaltyState state, double tau, const PenaltyConfig& cfg);
EdgePenaltyState nap_budget_step(EdgePenaltyState state, double f_curr, double f_prev,
                                 const PenaltyConfig& cfg);
EdgePenaltyState nap_update(const EdgePenaltyState& state, double tau, double f_curr, double f_prev,
                            const PenaltyConfig& cfg);

EdgePenaltyState vp_ap_update(EdgePenaltyState state, double tau, const ResidualPair& res,
                              const PenaltyConfig& cfg, int t);

EdgePenaltyState vp_nap_eta_step(EdgePenaltyState state, double tau, const ResidualPair& res,
                                 const PenaltyConfig& cfg);
EdgePenaltyState vp_nap_update(const EdgePenaltyState& state, double tau, double f_curr, double f_prev,
                               const ResidualPair& res, const PenaltyConfig& cfg);

// Penalty state owned by one node: one EdgePenaltyState per outgoing edge,
// indexed by position in the node's neighbor list.
class NodePenalty {
 public:
  struct Signals {
    ResidualPair residuals;
    std::span<const double> taus;  // empty unless uses_taus(scheme)
    double f_curr = 0.0;
    double f_prev = 0.0;
    int t = 0;
  };

  NodePenalty(Scheme scheme, const PenaltyConfig& cfg, std::size_t degree);

  Scheme scheme() const { return scheme_; }
  std::size_t degree() const { return edges_.size(); }
  std::span<const EdgePenaltyState> edges() const { return edges_; }
  double eta(std::size_t k) const { return edges_[k].eta; }
  double eta_sum() const;
  // Penalty entering this node's dual residual: eta_i for VP, otherwise the
  // mean over outgoing edges.
  double node_eta() const;
  std::size_t exhausted_edges() const;

  void update_eta(const Signals& signals);
  void update_budget(const Signals& signals);

 private:
  Scheme scheme_;
  PenaltyConfig cfg_;
  double vp_eta_;
  std::vector<EdgePenaltyState> edges_;
};

}  // namespace netadmm
