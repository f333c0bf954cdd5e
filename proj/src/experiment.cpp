#include "netadmm/experiment.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace netadmm {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) throw std::invalid_argument("unknown config key '" + where + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + where + key + "' has the wrong type");
  }
}

std::string_view to_string(Execution e) { return e == Execution::serial ? "serial" : "parallel"; }

Execution parse_execution(std::string_view s) {
  if (s == "serial") return Execution::serial;
  if (s == "parallel") return Execution::parallel;
  throw std::invalid_argument("unknown execution mode '" + std::string(s) + "'");
}

std::mt19937_64 node_rng(std::uint64_t seed, NodeId node) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node)};
  return std::mt19937_64(seq);
}

json record_json(const IterationRecord& r) {
  return {{"t", r.t},
          {"objective", r.objective},
          {"max_primal", r.max_primal},
          {"max_dual", r.max_dual},
          {"eta_min", r.eta_min},
          {"eta_max", r.eta_max},
          {"eta_mean", r.eta_mean},
          {"converged", r.converged}};
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CellResult run_cell(const ExperimentConfig& cfg, const Graph& graph, std::vector<Eigen::MatrixXd> shards,
                    const Eigen::MatrixXd& reference, const IterationObserver& observer) {
  std::vector<ModelPtr> models;
  std::vector<const DppcaNodeModel*> views;
  for (NodeId i = 0; i < shards.size(); ++i) {
    auto rng = node_rng(cfg.seed, i);
    PpcaParams init = random_init(shards[i], cfg.latent_dim, rng);
    auto model = std::make_unique<DppcaNodeModel>(std::move(shards[i]), std::move(init));
    views.push_back(model.get());
    models.push_back(std::move(model));
  }

  CellResult cell;
  cell.run = run(graph, cfg.engine_config(), models, observer);

  std::vector<Eigen::MatrixXd> bases;
  for (const auto& theta : cell.run.final_parameters)
    bases.push_back(unflatten(theta, reference.rows(), cfg.latent_dim).W);
  cell.angles = subspace_angles(bases, reference);
  cell.summary = run_report(cell.run.records, cfg.max_iterations, bases, reference, cfg.seed);
  for (const auto* v : views) {
    cell.diagnostics.regularized_solves += v->diagnostics().regularized_solves;
    cell.diagnostics.precision_fallbacks += v->diagnostics().precision_fallbacks;
  }

  json& s = cell.summary_json;
  s["config"] = cfg.to_json();
  s["seed"] = cfg.seed;
  s["iterations"] = cell.summary.iterations;
  s["converged"] = cell.summary.converged;
  s["max_angle_deg"] = cell.summary.max_angle_deg;
  s["per_node_angle_deg"] = cell.angles.per_node_angle_deg;
  s["initial_objective"] = cell.run.initial_objective;
  s["final"] = cell.run.records.empty() ? json::object() : record_json(cell.run.records.back());
  s["diagnostics"] = {{"regularized_solves", cell.diagnostics.regularized_solves},
                      {"precision_fallbacks", cell.diagnostics.precision_fallbacks}};
  if (uses_budget(cfg.scheme)) {
    json ceilings = json::array();
    double max_ceiling = 0.0;
    std::size_t exhausted = 0;
    for (const auto& p : cell.run.final_penalties) {
      json row = json::array();
      for (const auto& e : p.edges()) {
        row.push_back(e.ceiling);
        max_ceiling = std::max(max_ceiling, e.ceiling);
      }
      exhausted += p.exhausted_edges();
      ceilings.push_back(std::move(row));
    }
    s["budget"] = {{"ceilings", ceilings},
                   {"max_ceiling", max_ceiling},
                   {"ceiling_bound", cfg.penalty.ceiling_bound()},
                   {"exhausted_edges", exhausted}};
  }
  return cell;
}

std::string cell_name(Scheme scheme, const std::string& topology, std::size_t nodes, std::uint64_t seed) {
  std::ostringstream name;
  name << to_string(scheme) << '-' << topology << "-n" << nodes << "-s" << seed;
  return name.str();
}

int exit_code_for(const CellResult& cell) { return cell.summary.converged ? 0 : 2; }

}  // namespace

ExperimentConfig ExperimentConfig::defaults(Command command) {
  ExperimentConfig cfg;
  if (command == Command::sfm) {
    cfg.nodes = 5;
    cfg.latent_dim = 3;
  }
  cfg.synthetic.latent_dim = cfg.latent_dim;
  return cfg;
}

void ExperimentConfig::apply_json(const json& doc) {
  reject_unknown(doc,
                 {"scheme", "topology", "nodes", "seed", "max_iterations", "convergence_tol", "execution", "edge_coupling", "threads",
                  "latent_dim", "init", "output_dir", "penalty", "synthetic", "sfm", "sweep"},
                 "");
  std::string text;
  if (doc.contains("scheme")) {
    read(doc, "scheme", text, "");
    scheme = parse_scheme(text);
  }
  read(doc, "topology", topology, "");
  if (doc.contains("nodes")) {
    long long n = 0;
    read(doc, "nodes", n, "");
    if (n < 1) throw std::invalid_argument("num_nodes must be ≥ 1");
    nodes = static_cast<std::size_t>(n);
  }
  read(doc, "seed", seed, "");
  read(doc, "max_iterations", max_iterations, "");
  read(doc, "convergence_tol", convergence_tol, "");
  if (doc.contains("execution")) {
    read(doc, "execution", text, "");
    execution = parse_execution(text);
  }
  if (doc.contains("edge_coupling")) {
    read(doc, "edge_coupling", text, "");
    coupling = parse_edge_coupling(text);
  }
  read(doc, "threads", threads, "");
  read(doc, "latent_dim", latent_dim, "");
  synthetic.latent_dim = latent_dim;
  read(doc, "init", init, "");
  read(doc, "output_dir", output_dir, "");

  if (doc.contains("penalty")) {
    const json& p = doc.at("penalty");
    reject_unknown(p,
                   {"eta0", "mu", "tau_fixed", "t_max", "t_reset", "budget_T", "alpha", "beta", "f_tie_epsilon",
                    "relative_beta", "eval_point"},
                   "penalty.");
    read(p, "eta0", penalty.eta0, "penalty.");
    read(p, "mu", penalty.mu, "penalty.");
    read(p, "tau_fixed", penalty.tau_fixed, "penalty.");
    if (p.contains("t_max")) {
      read(p, "t_max", penalty.t_max, "penalty.");
      if (!p.contains("t_reset")) penalty.t_reset = penalty.t_max;
    }
    read(p, "t_reset", penalty.t_reset, "penalty.");
    read(p, "budget_T", penalty.budget_T, "penalty.");
    read(p, "alpha", penalty.alpha, "penalty.");
    read(p, "beta", penalty.beta, "penalty.");
    read(p, "f_tie_epsilon", penalty.f_tie_epsilon, "penalty.");
    read(p, "relative_beta", penalty.relative_beta, "penalty.");
    if (p.contains("eval_point")) {
      read(p, "eval_point", text, "penalty.");
      penalty.eval_point = parse_eval_point(text);
    }
  }
  if (doc.contains("synthetic")) {
    const json& s = doc.at("synthetic");
    reject_unknown(s, {"num_samples", "ambient_dim", "noise_variance", "seed"}, "synthetic.");
    read(s, "num_samples", synthetic.num_samples, "synthetic.");
    read(s, "ambient_dim", synthetic.ambient_dim, "synthetic.");
    read(s, "noise_variance", synthetic.noise_variance, "synthetic.");
    read(s, "seed", synthetic.seed, "synthetic.");
  }
  if (doc.contains("sfm")) {
    const json& s = doc.at("sfm");
    reject_unknown(s, {"measurements", "frames", "points", "noise_sigma", "seed"}, "sfm.");
    read(s, "measurements", measurements, "sfm.");
    read(s, "frames", sfm.frames, "sfm.");
    read(s, "points", sfm.points, "sfm.");
    read(s, "noise_sigma", sfm.noise_sigma, "sfm.");
    read(s, "seed", sfm.seed, "sfm.");
  }
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    reject_unknown(s, {"schemes", "topologies", "nodes", "seeds", "angle_filter_deg"}, "sweep.");
    if (s.contains("schemes")) {
      std::vector<std::string> names;
      read(s, "schemes", names, "sweep.");
      sweep.schemes.clear();
      for (const auto& name : names) sweep.schemes.push_back(parse_scheme(name));
    }
    read(s, "topologies", sweep.topologies, "sweep.");
    read(s, "nodes", sweep.nodes, "sweep.");
    read(s, "seeds", sweep.seeds, "sweep.");
    read(s, "angle_filter_deg", sweep.angle_filter_deg, "sweep.");
  }
}

json ExperimentConfig::to_json() const {
  json schemes = json::array();
  for (Scheme s : sweep.schemes) schemes.push_back(std::string(to_string(s)));
  json doc = {
      {"scheme", std::string(to_string(scheme))},
      {"topology", topology},
      {"nodes", nodes},
      {"seed", seed},
      {"max_iterations", max_iterations},
      {"convergence_tol", convergence_tol},
      {"execution", std::string(to_string(execution))},
      {"edge_coupling", std::string(to_string(coupling))},
      {"threads", threads},
      {"latent_dim", latent_dim},
      {"init", init},
      {"output_dir", output_dir},
      {"penalty",
       {{"eta0", penalty.eta0},
        {"mu", penalty.mu},
        {"tau_fixed", penalty.tau_fixed},
        {"t_max", penalty.t_max},
        {"t_reset", penalty.t_reset},
        {"budget_T", penalty.budget_T},
        {"alpha", penalty.alpha},
        {"beta", penalty.beta},
        {"f_tie_epsilon", penalty.f_tie_epsilon},
        {"relative_beta", penalty.relative_beta},
        {"eval_point", std::string(to_string(penalty.eval_point))}}},
      {"synthetic",
       {{"num_samples", synthetic.num_samples},
        {"ambient_dim", synthetic.ambient_dim},
        {"noise_variance", synthetic.noise_variance},
        {"seed", synthetic.seed}}},
      {"sfm",
       {{"measurements", measurements},
        {"frames", sfm.frames},
        {"points", sfm.points},
        {"noise_sigma", sfm.noise_sigma},
        {"seed", sfm.seed}}},
      {"sweep",
       {{"schemes", schemes},
        {"topologies", sweep.topologies},
        {"nodes", sweep.nodes},
        {"seeds", sweep.seeds}}},
  };
  // JSON has no infinity; an absent filter means "keep every run".
  if (std::isfinite(sweep.angle_filter_deg)) doc["sweep"]["angle_filter_deg"] = sweep.angle_filter_deg;
  return doc;
}

void ExperimentConfig::validate(Command command) const {
  if (nodes < 1) throw std::invalid_argument("num_nodes must be ≥ 1");
  if (init != "random") throw std::invalid_argument("init must be 'random'");
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  engine_config().validate();
  if (command == Command::sfm) {
    if (latent_dim != 3) throw std::invalid_argument("latent_dim must be 3 for structure from motion");
    return;
  }
  synthetic.validate();
  if (command == Command::sweep) {
    if (sweep.schemes.empty()) throw std::invalid_argument("sweep.schemes must not be empty");
    if (sweep.topologies.empty()) throw std::invalid_argument("sweep.topologies must not be empty");
    if (sweep.nodes.empty()) throw std::invalid_argument("sweep.nodes must not be empty");
    if (sweep.seeds.empty()) throw std::invalid_argument("sweep.seeds must not be empty");
    for (std::size_t n : sweep.nodes)
      if (n < 1) throw std::invalid_argument("num_nodes must be ≥ 1");
  }
}

EngineConfig ExperimentConfig::engine_config() const {
  EngineConfig e;
  e.scheme = scheme;
  e.penalty = penalty;
  e.max_iterations = max_iterations;
  e.convergence_tol = convergence_tol;
  e.execution = execution;
  e.coupling = coupling;
  e.num_threads = threads;
  return e;
}

CellResult run_dppca_cell(const ExperimentConfig& cfg, const Eigen::MatrixXd& data, const Eigen::MatrixXd& reference,
                          const IterationObserver& observer) {
  const Graph graph = build_topology(cfg.topology, cfg.nodes);
  return run_cell(cfg, graph, partition_even(data, cfg.nodes), reference, observer);
}

CellResult run_sfm_cell(const ExperimentConfig& cfg, const MeasurementMatrix& measurements,
                        const IterationObserver& observer) {
  const Graph graph = build_topology(cfg.topology, cfg.nodes);
  auto shards = partition_frames(measurements, cfg.nodes);
  for (auto& shard : shards) shard.rowwise() -= shard.colwise().mean();
  const Eigen::MatrixXd reference = svd_structure_basis(measurements.values, cfg.latent_dim);
  return run_cell(cfg, graph, std::move(shards), reference, observer);
}

void write_cell_artifacts(const std::filesystem::path& dir, const CellResult& cell) {
  std::filesystem::create_directories(dir);
  std::ostringstream trace;
  write_trace_csv(trace, cell.run.records);
  write_atomically(dir / "trace.csv", trace.str());
  write_atomically(dir / "summary.json", cell.summary_json.dump(2) + "\n");
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    cfg.validate(Command::run);
    const SyntheticData data = generate_synthetic(cfg.synthetic);
    const CellResult cell = run_dppca_cell(cfg, data.X, data.W_true);
    write_cell_artifacts(cfg.output_dir, cell);
    log << "scheme=" << to_string(cfg.scheme) << " iterations=" << cell.summary.iterations
        << " converged=" << (cell.summary.converged ? "yes" : "no") << " max_angle_deg=" << cell.summary.max_angle_deg
        << "\n";
    return exit_code_for(cell);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    cfg.validate(Command::sweep);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }

  struct Cell {
    ExperimentConfig cfg;
    std::string name;
    std::string error;
    CellResult result;
  };
  std::vector<Cell> cells;
  for (Scheme scheme : cfg.sweep.schemes)
    for (const auto& topology : cfg.sweep.topologies)
      for (std::size_t n : cfg.sweep.nodes)
        for (std::uint64_t seed : cfg.sweep.seeds) {
          Cell c{cfg, cell_name(scheme, topology, n, seed), {}, {}};
          c.cfg.scheme = scheme;
          c.cfg.topology = topology;
          c.cfg.nodes = n;
          c.cfg.seed = seed;
          c.cfg.output_dir = (std::filesystem::path(cfg.output_dir) / c.name).string();
          // Parallelism goes to cells; each cell's engine runs serially.
          if (cfg.execution == Execution::parallel) c.cfg.execution = Execution::serial;
          cells.push_back(std::move(c));
        }

  SyntheticData data;
  try {
    data = generate_synthetic(cfg.synthetic);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }

  const auto count = static_cast<std::ptrdiff_t>(cells.size());
  const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (cfg.execution == Execution::parallel)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    Cell& c = cells[static_cast<std::size_t>(k)];
    try {
      c.result = run_dppca_cell(c.cfg, data.X, data.W_true);
      write_cell_artifacts(c.cfg.output_dir, c.result);
    } catch (const std::exception& e) {
      c.error = e.what();
    }
  }

  // Group by (scheme, topology, nodes) in sweep order.
  json table = json::array();
  std::ostringstream csv;
  csv.precision(12);
  csv << "scheme,topology,nodes,runs,converged_runs,failed_runs,filtered_runs,median_iterations,"
         "median_max_angle_deg\n";
  json errors = json::array();
  std::size_t k = 0;
  while (k < cells.size()) {
    const Cell& head = cells[k];
    std::vector<RunSummary> runs;
    std::size_t failed = 0;
    std::size_t end = k;
    while (end < cells.size() && cells[end].cfg.scheme == head.cfg.scheme &&
           cells[end].cfg.topology == head.cfg.topology && cells[end].cfg.nodes == head.cfg.nodes) {
      if (cells[end].error.empty()) {
        runs.push_back(cells[end].result.summary);
      } else {
        ++failed;
        errors.push_back({{"cell", cells[end].name}, {"error", cells[end].error}});
      }
      ++end;
    }
    const BatchSummary b = summarize_batch(runs, cfg.sweep.angle_filter_deg);
    const bool has_runs = b.runs > b.filtered_runs;
    table.push_back({{"scheme", std::string(to_string(head.cfg.scheme))},
                     {"topology", head.cfg.topology},
                     {"nodes", head.cfg.nodes},
                     {"runs", b.runs},
                     {"converged_runs", b.converged_runs},
                     {"failed_runs", failed},
                     {"filtered_runs", b.filtered_runs},
                     {"median_iterations", has_runs ? json(b.median_iterations) : json(nullptr)},
                     {"median_max_angle_deg", has_runs ? json(b.median_angle_deg) : json(nullptr)}});
    csv << to_string(head.cfg.scheme) << ',' << head.cfg.topology << ',' << head.cfg.nodes << ',' << b.runs << ','
        << b.converged_runs << ',' << failed << ',' << b.filtered_runs << ',';
    if (has_runs)
      csv << b.median_iterations << ',' << b.median_angle_deg << '\n';
    else
      csv << "nan,nan\n";
    k = end;
  }

  try {
    std::filesystem::create_directories(cfg.output_dir);
    write_atomically(std::filesystem::path(cfg.output_dir) / "comparison.csv", csv.str());
    json report = {{"config", cfg.to_json()}, {"table", table}, {"errors", errors}};
    write_atomically(std::filesystem::path(cfg.output_dir) / "comparison.json", report.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  log << csv.str();
  for (const auto& e : errors) log << "cell " << e["cell"].get<std::string>() << " failed: " << e["error"].get<std::string>() << "\n";
  return 0;
}

int cmd_sfm(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    cfg.validate(Command::sfm);
    const MeasurementMatrix m =
        cfg.measurements.empty() ? generate_synthetic_sfm(cfg.sfm) : load_measurements(cfg.measurements);
    if (static_cast<std::size_t>(m.frames()) < cfg.nodes)
      throw std::invalid_argument("nodes (" + std::to_string(cfg.nodes) + ") exceed frames (" +
                                  std::to_string(m.frames()) + ")");
    CellResult cell = run_sfm_cell(cfg, m);
    cell.summary_json["frames"] = m.frames();
    cell.summary_json["points"] = m.points();
    cell.summary_json["reference"] = "centralized rank-3 SVD";
    write_cell_artifacts(cfg.output_dir, cell);
    log << "scheme=" << to_string(cfg.scheme) << " frames=" << m.frames() << " points=" << m.points()
        << " iterations=" << cell.summary.iterations << " max_angle_deg=" << cell.summary.max_angle_deg << "\n";
    return exit_code_for(cell);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace netadmm
