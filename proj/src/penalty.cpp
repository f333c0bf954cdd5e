#include "netadmm/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace netadmm {

namespace {

constexpr double kRelativeGuard = 1e-12;

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + " " + what);
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
  if (name == "fixed") return Scheme::fixed;
  if (name == "vp") return Scheme::vp;
  if (name == "ap") return Scheme::ap;
  if (name == "nap") return Scheme::nap;
  if (name == "vp_ap") return Scheme::vp_ap;
  if (name == "vp_nap") return Scheme::vp_nap;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::fixed: return "fixed";
    case Scheme::vp: return "vp";
    case Scheme::ap: return "ap";
    case Scheme::nap: return "nap";
    case Scheme::vp_ap: return "vp_ap";
    case Scheme::vp_nap: return "vp_nap";
  }
  return "?";
}

bool uses_residuals(Scheme s) { return s == Scheme::vp || s == Scheme::vp_ap || s == Scheme::vp_nap; }
bool uses_taus(Scheme s) {
  return s == Scheme::ap || s == Scheme::nap || s == Scheme::vp_ap || s == Scheme::vp_nap;
}
bool uses_budget(Scheme s) { return s == Scheme::nap || s == Scheme::vp_nap; }

EvalPoint parse_eval_point(std::string_view name) {
  if (name == "neighbor") return EvalPoint::neighbor;
  if (name == "midpoint") return EvalPoint::midpoint;
  throw std::invalid_argument("unknown eval_point '" + std::string(name) + "'");
}

std::string_view to_string(EvalPoint point) {
  return point == EvalPoint::neighbor ? "neighbor" : "midpoint";
}

void PenaltyConfig::validate() const {
  require(std::isfinite(eta0) && eta0 > 0.0, "eta0", "must be > 0");
  require(std::isfinite(mu) && mu > 1.0, "mu", "must be > 1");
  require(std::isfinite(tau_fixed) && tau_fixed > 0.0, "tau_fixed", "must be > 0");
  require(t_max >= 1, "t_max", "must be >= 1");
  require(t_reset >= 1, "t_reset", "must be >= 1");
  require(std::isfinite(budget_T) && budget_T > 0.0, "budget_T", "must be > 0");
  require(alpha > 0.0 && alpha < 1.0, "alpha", "must be in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "beta", "must be in (0, 1)");
  require(std::isfinite(f_tie_epsilon) && f_tie_epsilon > 0.0, "f_tie_epsilon", "must be > 0");
}

ResidualPair local_residuals(const Eigen::Ref<const Eigen::VectorXd>& theta_i,
                             const Eigen::Ref<const Eigen::VectorXd>& neighbor_avg,
                             const Eigen::Ref<const Eigen::VectorXd>& neighbor_avg_prev,
                             double eta_i) {
  if (theta_i.size() != neighbor_avg.size() || theta_i.size() != neighbor_avg_prev.size())
    throw std::invalid_argument("local_residuals: parameter blocks differ in size");
  return {(theta_i - neighbor_avg).squaredNorm(),
          eta_i * eta_i * (neighbor_avg - neighbor_avg_prev).squaredNorm()};
}

ResidualBalance residual_balance(const ResidualPair& res, double mu) {
  // Compare norms through squares: ||r|| > mu ||s|| <=> ||r||^2 > mu^2 ||s||^2.
  const double mu_sq = mu * mu;
  if (res.primal_sq > mu_sq * res.dual_sq) return ResidualBalance::increase;
  if (res.dual_sq > mu_sq * res.primal_sq) return ResidualBalance::decrease;
  return ResidualBalance::hold;
}

double vp_update(double eta_i, const ResidualPair& res, const PenaltyConfig& cfg, int t) {
  if (t >= cfg.t_reset) return cfg.eta0;
  switch (residual_balance(res, cfg.mu)) {
    case ResidualBalance::increase: return eta_i * (1.0 + cfg.tau_fixed);
    case ResidualBalance::decrease: return eta_i / (1.0 + cfg.tau_fixed);
    case ResidualBalance::hold: break;
  }
  return eta_i;
}

std::vector<double> ap_taus(double f_self, std::span<const double> f_neighbors, double tie_epsilon) {
  if (!std::isfinite(f_self)) throw std::domain_error("ap_taus: non-finite own objective");
  double f_max = f_self;
  double f_min = f_self;
  for (double f : f_neighbors) {
    if (!std::isfinite(f)) throw std::domain_error("ap_taus: non-finite neighbor objective");
    f_max = std::max(f_max, f);
    f_min = std::min(f_min, f);
  }
  std::vector<double> taus(f_neighbors.size(), 0.0);
  const double spread = f_max - f_min;
  if (spread <= tie_epsilon * std::max(1.0, std::abs(f_max))) return taus;
  auto kappa = [&](double f) { return (f - f_min) / spread + 1.0; };
  const double kappa_self = kappa(f_self);
  for (std::size_t k = 0; k < taus.size(); ++k) taus[k] = kappa_self / kappa(f_neighbors[k]) - 1.0;
  return taus;
}

double ap_update(double tau, const PenaltyConfig& cfg, int t) {
  return t < cfg.t_max ? cfg.eta0 * (1.0 + tau) : cfg.eta0;
}

bool objective_changed(double f_curr, double f_prev, const PenaltyConfig& cfg) {
  double change = std::abs(f_curr - f_prev);
  if (cfg.relative_beta) change /= std::abs(f_prev) + kRelativeGuard;
  return change > cfg.beta;
}

EdgePenaltyState nap_eta_step(EdgePenaltyState state, double tau, const PenaltyConfig& cfg) {
  if (state.spent < state.ceiling) {
    state.eta = cfg.eta0 * (1.0 + tau);
    state.spent += std::abs(tau);
  } else {
    state.eta = cfg.eta0;
  }
  return state;
}

EdgePenaltyState nap_budget_step(EdgePenaltyState state, double f_curr, double f_prev,
                                 const PenaltyConfig& cfg) {
  if (state.spent >= state.ceiling && objective_changed(f_curr, f_prev, cfg)) {
    state.ceiling += std::pow(cfg.alpha, state.growth_count) * cfg.budget_T;
    ++state.growth_count;
  }
  return state;
}

EdgePenaltyState nap_update(const EdgePenaltyState& state, double tau, double f_curr, double f_prev,
                            const PenaltyConfig& cfg) {
  return nap_budget_step(nap_eta_step(state, tau, cfg), f_curr, f_prev, cfg);
}

namespace {

// Residual-balanced, tau-weighted step shared by the combined schemes.
void combined_step(EdgePenaltyState& state, double tau, const ResidualPair& res, const PenaltyConfig& cfg) {
  switch (residual_balance(res, cfg.mu)) {
    case ResidualBalance::increase: state.eta *= (1.0 + tau) * 2.0; break;
    case ResidualBalance::decrease: state.eta *= (1.0 + tau) * 0.5; break;
    case ResidualBalance::hold: break;
  }
}

}  // namespace

EdgePenaltyState vp_ap_update(EdgePenaltyState state, double tau, const ResidualPair& res,
                              const PenaltyConfig& cfg, int t) {
  if (t > cfg.t_max) {
    state.eta = cfg.eta0;
    return state;
  }
  combined_step(state, tau, res, cfg);
  return state;
}

EdgePenaltyState vp_nap_eta_step(EdgePenaltyState state, double tau, const ResidualPair& res,
                                 const PenaltyConfig& cfg) {
  // The budget sums |tau| over every open round, whichever residual branch
  // fires; otherwise a balanced edge could hold a non-initial eta forever.
  if (state.spent < state.ceiling) {
    combined_step(state, tau, res, cfg);
    state.spent += std::abs(tau);
  } else {
    state.eta = cfg.eta0;
  }
  return state;
}

EdgePenaltyState vp_nap_update(const EdgePenaltyState& state, double tau, double f_curr, double f_prev,
                               const ResidualPair& res, const PenaltyConfig& cfg) {
  return nap_budget_step(vp_nap_eta_step(state, tau, res, cfg), f_curr, f_prev, cfg);
}

NodePenalty::NodePenalty(Scheme scheme, const PenaltyConfig& cfg, std::size_t degree)
    : scheme_(scheme), cfg_(cfg), vp_eta_(cfg.eta0), edges_(degree, EdgePenaltyState::initial(cfg)) {}

double NodePenalty::eta_sum() const {
  double sum = 0.0;
  for (const auto& e : edges_) sum += e.eta;
  return sum;
}

double NodePenalty::node_eta() const {
  if (scheme_ == Scheme::vp) return vp_eta_;
  if (edges_.empty()) return cfg_.eta0;
  return eta_sum() / static_cast<double>(edges_.size());
}

std::size_t NodePenalty::exhausted_edges() const {
  if (!uses_budget(scheme_)) return 0;
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const auto& e) { return e.exhausted(); }));
}

void NodePenalty::update_eta(const Signals& s) {
  if (uses_taus(scheme_) && s.taus.size() != edges_.size())
    throw std::invalid_argument("NodePenalty: one tau per outgoing edge required");
  switch (scheme_) {
    case Scheme::fixed:
      return;
    case Scheme::vp:
      vp_eta_ = vp_update(vp_eta_, s.residuals, cfg_, s.t);
      for (auto& e : edges_) e.eta = vp_eta_;
      return;
    case Scheme::ap:
      for (std::size_t k = 0; k < edges_.size(); ++k) edges_[k].eta = ap_update(s.taus[k], cfg_, s.t);
      return;
    case Scheme::nap:
      for (std::size_t k = 0; k < edges_.size(); ++k) edges_[k] = nap_eta_step(edges_[k], s.taus[k], cfg_);
      return;
    case Scheme::vp_ap:
      for (std::size_t k = 0; k < edges_.size(); ++k)
        edges_[k] = vp_ap_update(edges_[k], s.taus[k], s.residuals, cfg_, s.t);
      return;
    case Scheme::vp_nap:
      for (std::size_t k = 0; k < edges_.size(); ++k)
        edges_[k] = vp_nap_eta_step(edges_[k], s.taus[k], s.residuals, cfg_);
      return;
  }
}

void NodePenalty::update_budget(const Signals& s) {
  if (!uses_budget(scheme_)) return;
  for (auto& e : edges_) e = nap_budget_step(e, s.f_curr, s.f_prev, cfg_);
}

}  // namespace netadmm
