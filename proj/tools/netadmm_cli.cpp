// netadmm_cli: run, sweep and structure-from-motion experiments for
// decentralized consensus ADMM with adaptive penalties.
//
//   netadmm_cli run   --scheme vp --topology complete --nodes 20 --seed 1
//   netadmm_cli sweep --schemes fixed,vp,ap,nap,vp_ap,vp_nap --seeds 1,2,3,4,5
//   netadmm_cli sfm   --measurements tracks.csv --scheme vp_ap
//   netadmm_cli make-sfm --out scene.csv
//
// Settings resolve as: built-in defaults < --config JSON < $NETADMM_OUTPUT_DIR
// (output directory only) < command-line flags.

#include "netadmm/experiment.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

using nlohmann::json;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> scheme, topology, execution, edge_coupling, output_dir, eval_point, measurements;
  std::optional<long long> nodes;
  std::optional<std::uint64_t> seed, data_seed, sfm_seed;
  std::optional<int> max_iterations, threads, t_max, t_reset;
  std::optional<long> latent_dim, samples, dim, frames, points;
  std::optional<double> tol, eta0, mu, tau_fixed, budget_T, alpha, beta, tie_eps, noise_variance, noise_sigma,
      angle_filter;
  std::optional<bool> relative_beta;
  std::vector<std::string> schemes, topologies;
  std::vector<std::size_t> node_counts;
  std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config_path, "JSON experiment config");
  cmd->add_option("--scheme", f.scheme, "fixed|vp|ap|nap|vp_ap|vp_nap");
  cmd->add_option("--topology", f.topology, "complete|ring|cluster");
  cmd->add_option("--nodes", f.nodes, "number of nodes");
  cmd->add_option("--seed", f.seed, "initialization seed");
  cmd->add_option("--max-iterations", f.max_iterations);
  cmd->add_option("--tol", f.tol, "relative objective change threshold");
  cmd->add_option("--execution", f.execution, "serial|parallel");
  cmd->add_option("--edge-coupling", f.edge_coupling, "symmetric|directed");
  cmd->add_option("--threads", f.threads, "OpenMP threads (0 = default)");
  cmd->add_option("--latent-dim", f.latent_dim);
  cmd->add_option("-o,--output-dir", f.output_dir);
  cmd->add_option("--eta0", f.eta0);
  cmd->add_option("--mu", f.mu);
  cmd->add_option("--tau-fixed", f.tau_fixed);
  cmd->add_option("--t-max", f.t_max);
  cmd->add_option("--t-reset", f.t_reset);
  cmd->add_option("--budget-T", f.budget_T);
  cmd->add_option("--alpha", f.alpha);
  cmd->add_option("--beta", f.beta);
  cmd->add_option("--f-tie-epsilon", f.tie_eps);
  cmd->add_option("--relative-beta", f.relative_beta, "true|false");
  cmd->add_option("--eval-point", f.eval_point, "neighbor|midpoint");
}

void add_synthetic(CLI::App* cmd, Flags& f) {
  cmd->add_option("--samples", f.samples);
  cmd->add_option("--dim", f.dim, "ambient dimension D");
  cmd->add_option("--noise-variance", f.noise_variance);
  cmd->add_option("--data-seed", f.data_seed);
}

template <class T>
void put(json& doc, const char* key, const std::optional<T>& v) {
  if (v) doc[key] = *v;
}

json overlay(const Flags& f) {
  json doc = json::object();
  put(doc, "scheme", f.scheme);
  put(doc, "topology", f.topology);
  put(doc, "nodes", f.nodes);
  put(doc, "seed", f.seed);
  put(doc, "max_iterations", f.max_iterations);
  put(doc, "convergence_tol", f.tol);
  put(doc, "execution", f.execution);
  put(doc, "edge_coupling", f.edge_coupling);
  put(doc, "threads", f.threads);
  put(doc, "latent_dim", f.latent_dim);
  put(doc, "output_dir", f.output_dir);

  json penalty = json::object();
  put(penalty, "eta0", f.eta0);
  put(penalty, "mu", f.mu);
  put(penalty, "tau_fixed", f.tau_fixed);
  put(penalty, "t_max", f.t_max);
  put(penalty, "t_reset", f.t_reset);
  put(penalty, "budget_T", f.budget_T);
  put(penalty, "alpha", f.alpha);
  put(penalty, "beta", f.beta);
  put(penalty, "f_tie_epsilon", f.tie_eps);
  put(penalty, "relative_beta", f.relative_beta);
  put(penalty, "eval_point", f.eval_point);
  if (!penalty.empty()) doc["penalty"] = penalty;

  json synthetic = json::object();
  put(synthetic, "num_samples", f.samples);
  put(synthetic, "ambient_dim", f.dim);
  put(synthetic, "noise_variance", f.noise_variance);
  put(synthetic, "seed", f.data_seed);
  if (!synthetic.empty()) doc["synthetic"] = synthetic;

  json sfm = json::object();
  put(sfm, "measurements", f.measurements);
  put(sfm, "frames", f.frames);
  put(sfm, "points", f.points);
  put(sfm, "noise_sigma", f.noise_sigma);
  put(sfm, "seed", f.sfm_seed);
  if (!sfm.empty()) doc["sfm"] = sfm;

  // `--schemes ""` arrives as one empty name and means an empty list.
  auto names = [](const std::vector<std::string>& list) {
    json out = json::array();
    for (const auto& s : list)
      if (!s.empty()) out.push_back(s);
    return out;
  };
  json sweep = json::object();
  if (!f.schemes.empty()) sweep["schemes"] = names(f.schemes);
  if (!f.topologies.empty()) sweep["topologies"] = names(f.topologies);
  if (!f.node_counts.empty()) sweep["nodes"] = f.node_counts;
  if (!f.seeds.empty()) sweep["seeds"] = f.seeds;
  put(sweep, "angle_filter_deg", f.angle_filter);
  if (!sweep.empty()) doc["sweep"] = sweep;
  return doc;
}

netadmm::ExperimentConfig resolve(netadmm::Command command, const Flags& f) {
  auto cfg = netadmm::ExperimentConfig::defaults(command);
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw std::invalid_argument("cannot open config " + f.config_path);
    cfg.apply_json(json::parse(in));
  }
  if (const char* env = std::getenv("NETADMM_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  cfg.apply_json(overlay(f));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized consensus ADMM with adaptive penalties"};
  app.require_subcommand(1);
  Flags flags;

  auto* run = app.add_subcommand("run", "single D-PPCA run on synthetic data");
  add_common(run, flags);
  add_synthetic(run, flags);

  auto* sweep = app.add_subcommand("sweep", "scheme x topology x size x seed grid");
  add_common(sweep, flags);
  add_synthetic(sweep, flags);
  sweep->add_option("--schemes", flags.schemes)->delimiter(',');
  sweep->add_option("--topologies", flags.topologies)->delimiter(',');
  sweep->add_option("--node-counts", flags.node_counts)->delimiter(',');
  sweep->add_option("--seeds", flags.seeds)->delimiter(',');
  sweep->add_option("--angle-filter", flags.angle_filter, "drop runs above this angle from medians");

  auto* sfm = app.add_subcommand("sfm", "distributed affine structure from motion");
  add_common(sfm, flags);
  sfm->add_option("--measurements", flags.measurements, "2F x N measurement CSV");
  sfm->add_option("--frames", flags.frames, "frames of the generated scene");
  sfm->add_option("--points", flags.points, "points of the generated scene");
  sfm->add_option("--noise-sigma", flags.noise_sigma);
  sfm->add_option("--sfm-seed", flags.sfm_seed);

  std::string scene_out;
  netadmm::SfmSpec scene;
  auto* make_sfm = app.add_subcommand("make-sfm", "write a synthetic measurement CSV");
  make_sfm->add_option("--out", scene_out)->required();
  make_sfm->add_option("--frames", scene.frames);
  make_sfm->add_option("--points", scene.points);
  make_sfm->add_option("--noise-sigma", scene.noise_sigma);
  make_sfm->add_option("--seed", scene.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*make_sfm) {
      std::ofstream out(scene_out);
      if (!out) throw std::runtime_error("cannot write " + scene_out);
      netadmm::write_measurements(out, netadmm::generate_synthetic_sfm(scene));
      return 0;
    }
    if (*run) return netadmm::cmd_run(resolve(netadmm::Command::run, flags), std::cout);
    if (*sweep) return netadmm::cmd_sweep(resolve(netadmm::Command::sweep, flags), std::cout);
    if (*sfm) return netadmm::cmd_sfm(resolve(netadmm::Command::sfm, flags), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
