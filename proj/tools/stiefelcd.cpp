#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "report.hpp"
#include "stiefelcd/bench.hpp"
#include "stiefelcd/error.hpp"
#include "stiefelcd/graph.hpp"
#include "stiefelcd/metrics.hpp"
#include "stiefelcd/partition.hpp"
#include "stiefelcd/solver.hpp"

namespace {

using nlohmann::json;
using namespace stiefelcd;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

IndexBase parse_base(const std::string& s) {
  if (s == "0") return IndexBase::kZero;
  if (s == "1") return IndexBase::kOne;
  return IndexBase::kAuto;
}

ParsedGraph load_graph(const std::string& path, const std::string& base) {
  std::ifstream in = open_input(path);
  try {
    return parse_edge_list(in, parse_base(base));
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

Partition load_labels(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return read_labels(in);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void emit(const json& report, const std::string& output) {
  if (output.empty()) {
    cli::write_json(std::cout, report);
    return;
  }
  std::ofstream out(output);
  if (!out) throw InputError("cannot write " + output);
  cli::write_json(out, report);
}

void emit_tsv(const std::vector<std::string>& nodes, const Partition& p, const std::string& output) {
  std::ostringstream buf;
  for (std::size_t i = 0; i < nodes.size(); ++i) buf << nodes[i] << '\t' << p[i] << '\n';
  if (output.empty()) {
    std::cout << buf.str();
    return;
  }
  std::ofstream out(output);
  if (!out) throw InputError("cannot write " + output);
  out << buf.str();
}

json truth_scores(const Graph& g, const Partition& pred, const std::optional<std::string>& truth_path) {
  if (!truth_path) return nullptr;
  const Partition truth = load_labels(*truth_path);
  if (truth.size() != pred.size()) {
    throw InputError("truth has " + std::to_string(truth.size()) + " labels, graph has " + std::to_string(g.n()) +
                     " nodes");
  }
  return {{"ami", ami(pred, truth)},
          {"nmi", nmi(pred, truth)},
          {"truth_communities", truth.community_count()},
          {"truth_modularity", modularity_score(g, truth)}};
}

json partition_json(const std::vector<std::string>& nodes, const Partition& p) {
  return {{"communities", p.labels()}, {"nodes", nodes}};
}

struct DetectArgs {
  std::string input;
  std::optional<std::string> truth;
  std::string index_base = "auto";
  std::string output;
  std::string format = "json";
  SolverConfig config;
  bool no_trace = false;
};

json config_json(const SolverConfig& c) {
  return {{"beta", c.beta},
          {"grad_tol", c.grad_tol},
          {"lambda0", c.lambda0},
          {"lambda_growth", c.lambda_growth},
          {"max_continuation_rounds", c.max_continuation_rounds},
          {"max_outer_iter", c.max_outer_iter},
          {"mu_scale", c.mu_scale},
          {"q", c.q},
          {"restarts", c.restarts},
          {"safeguard_n", c.safeguard_period},
          {"seed", c.seed},
          {"sigma", c.sigma}};
}

json events_json(const SolverEvents& e) {
  return {{"momentum_resets", e.momentum_resets},
          {"prox_cold_restarts", e.prox_cold_restarts},
          {"prox_fixed_point_steps", e.prox_fixed_point_steps},
          {"prox_relaxations", e.prox_relaxations},
          {"safeguard_activations", e.safeguard_activations},
          {"safeguard_calls", e.safeguard_calls},
          {"safeguard_underflows", e.safeguard_underflows}};
}

void add_solver_options(CLI::App* cmd, SolverConfig& c) {
  cmd->add_option("--lambda0", c.lambda0, "initial l1 weight")->capture_default_str();
  cmd->add_option("--lambda-growth", c.lambda_growth, "lambda multiplier per round")->capture_default_str();
  cmd->add_option("--mu-scale", c.mu_scale, "prox step as a multiple of 1/L")->capture_default_str();
  cmd->add_option("--sigma", c.sigma, "sufficient decrease constant")->capture_default_str();
  cmd->add_option("--beta", c.beta, "backtracking factor")->capture_default_str();
  cmd->add_option("--safeguard-n", c.safeguard_period, "safeguard period")->capture_default_str();
  cmd->add_option("--max-iter", c.max_outer_iter, "iterations per lambda round")->capture_default_str();
  cmd->add_option("--max-rounds", c.max_continuation_rounds, "lambda rounds")->capture_default_str();
  cmd->add_option("--tol", c.grad_tol, "stationarity tolerance (0: 1e-6 sqrt(nq))")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--restarts", c.restarts, "rotated restarts of the spectral start")->capture_default_str();
}

int run_detect(const DetectArgs& a) {
  const ParsedGraph parsed = load_graph(a.input, a.index_base);
  const ModularityOperator op(parsed.graph);
  const DetectionResult r = continuation(op, a.config);
  if (r.spectral_warning) std::cerr << "warning: fewer than q-1 positive eigenvalues in the spectral start\n";
  json scores = truth_scores(parsed.graph, r.partition, a.truth);
  if (a.format == "tsv") {
    emit_tsv(parsed.labels, r.partition, a.output);
    return 0;
  }
  json report = {
      {"command", "detect"},
      {"communities", r.partition.community_count()},
      {"config", config_json(a.config)},
      {"events", events_json(r.events)},
      {"graph", {{"duplicate_edges", parsed.duplicate_edges}, {"edges", parsed.graph.m()}, {"input", a.input},
                 {"nodes", parsed.graph.n()}, {"self_loops", parsed.self_loops}}},
      {"iterations", r.iterations},
      {"lambda_path", r.lambda_path},
      {"lipschitz", r.lipschitz},
      {"modularity", r.modularity},
      {"objective_trace", a.no_trace ? json::array() : json(r.objective_trace)},
      {"partition", partition_json(parsed.labels, r.partition)},
      {"penalized_objective", r.penalized_objective},
      {"best_restart", r.best_restart},
      {"row_dominance", r.row_dominance},
      {"selected_round", r.selected_round},
      {"spectral_warning", r.spectral_warning},
      {"step", r.step},
      {"wall_seconds", r.wall_seconds},
  };
  if (!scores.is_null()) report["truth"] = scores;
  emit(report, a.output);
  return 0;
}

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::optional<std::string> graph;
  std::string index_base = "auto";
};

int run_eval(const EvalArgs& a) {
  const Partition pred = load_labels(a.pred);
  const Partition truth = load_labels(a.truth);
  if (pred.size() != truth.size()) {
    throw InputError("prediction has " + std::to_string(pred.size()) + " labels, truth has " +
                     std::to_string(truth.size()));
  }
  json report = {{"command", "eval"}, {"ami", ami(pred, truth)}, {"nmi", nmi(pred, truth)}, {"nodes", pred.size()}};
  if (a.graph) {
    const ParsedGraph parsed = load_graph(*a.graph, a.index_base);
    if (parsed.graph.n() != static_cast<int>(pred.size())) {
      throw InputError("graph has " + std::to_string(parsed.graph.n()) + " nodes, labels cover " +
                       std::to_string(pred.size()));
    }
    report["modularity"] = modularity_score(parsed.graph, pred);
  }
  cli::write_json(std::cout, report);
  return 0;
}

std::vector<int> parse_sizes(const std::string& s) {
  std::vector<int> sizes;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      sizes.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("bad community size '" + tok + "'");
    }
  }
  if (sizes.empty()) throw InputError("--sizes is empty");
  return sizes;
}

struct GenerateArgs {
  std::string kind;
  std::string sizes;
  double avg_degree = 20.0;
  double mixing = 0.1;
  std::uint64_t seed = 0;
  bool shuffle = false;
  std::string out_prefix;
};

GeneratedGraph generate(const GenerateArgs& a, json& info) {
  const std::vector<int> sizes = parse_sizes(a.sizes);
  if (a.kind == "ideal") {
    info = {{"kind", "ideal"}, {"sizes", sizes}};
    return a.shuffle ? ideal_graph(sizes, a.seed) : ideal_graph(sizes);
  }
  PlantedGraph p = planted_partition(PlantedSpec{sizes, a.avg_degree, a.mixing, a.seed});
  info = {{"avg_degree", a.avg_degree}, {"kind", "planted"},      {"mixing", a.mixing}, {"p_in", p.p_in},
          {"p_out", p.p_out},           {"realized_mixing", p.realized_mixing}, {"seed", a.seed}, {"sizes", sizes}};
  return {std::move(p.graph), std::move(p.truth)};
}

void write_generated(const GeneratedGraph& g, const std::string& prefix) {
  std::ofstream edges(prefix + ".edges");
  std::ofstream truth(prefix + ".truth");
  if (!edges || !truth) throw InputError("cannot write files with prefix " + prefix);
  edges << "# " << g.graph.n() << " nodes, " << g.graph.m() << " edges, 0-based ids\n";
  write_edge_list(edges, g.graph);
  write_labels(truth, g.truth);
}

int run_generate(const GenerateArgs& a) {
  json info;
  const GeneratedGraph g = generate(a, info);
  write_generated(g, a.out_prefix);
  info["command"] = "generate";
  info["nodes"] = g.graph.n();
  info["edges"] = g.graph.m();
  info["truth_modularity"] = modularity_score(g.graph, g.truth);
  cli::write_json(std::cout, info);
  return 0;
}

struct BenchArgs {
  GenerateArgs gen;
  std::optional<std::string> input;
  std::optional<std::string> truth;
  std::string index_base = "auto";
  int louvain_runs = 1;
  SolverConfig config;
  bool skip_arppg = false;
};

int run_bench(const BenchArgs& a) {
  json instance;
  std::optional<GeneratedGraph> gen;
  std::optional<ParsedGraph> parsed;
  std::optional<Partition> truth;
  if (a.input) {
    parsed = load_graph(*a.input, a.index_base);
    instance = {{"input", *a.input}};
    if (a.truth) truth = load_labels(*a.truth);
  } else {
    gen = generate(a.gen, instance);
    truth = gen->truth;
    if (!a.gen.out_prefix.empty()) write_generated(*gen, a.gen.out_prefix);
  }
  const Graph& g = a.input ? parsed->graph : gen->graph;
  if (truth && truth->size() != static_cast<std::size_t>(g.n())) throw InputError("truth length differs from graph");
  instance["nodes"] = g.n();
  instance["edges"] = g.m();

  auto score = [&](const Partition& p, double seconds) {
    json s = {{"communities", p.community_count()}, {"modularity", modularity_score(g, p)}, {"wall_seconds", seconds}};
    if (truth) {
      s["nmi"] = nmi(p, *truth);
      s["ami"] = ami(p, *truth);
    }
    return s;
  };

  json report = {{"command", "bench"}, {"instance", instance}};
  {
    const auto start = std::chrono::steady_clock::now();
    std::optional<Partition> best;
    double best_q = 0.0;
    int best_seed = 0;
    for (int r = 0; r < a.louvain_runs; ++r) {
      Partition p = louvain(g, a.config.seed + static_cast<std::uint64_t>(r));
      const double q = modularity_score(g, p);
      if (!best || q > best_q) {
        best = std::move(p);
        best_q = q;
        best_seed = r;
      }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report["louvain"] = score(*best, seconds);
    report["louvain"]["runs"] = a.louvain_runs;
    report["louvain"]["best_run"] = best_seed;
  }
  if (!a.skip_arppg) {
    const ModularityOperator op(g);
    const DetectionResult r = continuation(op, a.config);
    report["arppg"] = score(r.partition, r.wall_seconds);
    report["arppg"]["config"] = config_json(a.config);
    report["arppg"]["events"] = events_json(r.events);
  }
  if (truth) report["instance"]["truth_modularity"] = modularity_score(g, *truth);
  cli::write_json(std::cout, report);
  return 0;
}

void add_generator_options(CLI::App* cmd, GenerateArgs& g, bool required) {
  auto* kind = cmd->add_option("--kind", g.kind, "ideal or planted")->check(CLI::IsMember({"ideal", "planted"}));
  auto* sizes = cmd->add_option("--sizes", g.sizes, "comma separated community sizes");
  if (required) {
    kind->required();
    sizes->required();
  }
  cmd->add_option("--avg-degree", g.avg_degree, "planted: mean degree")->capture_default_str();
  cmd->add_option("--mixing", g.mixing, "planted: mixing parameter")->capture_default_str();
  cmd->add_option("--graph-seed", g.seed, "generator seed");
  cmd->add_flag("--shuffle", g.shuffle, "ideal: shuffle node ids using the generator seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Community detection by sparse optimization over the Stiefel manifold"};
  app.require_subcommand(1);

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "detect communities in an edge list");
  d->add_option("--input", detect.input, "edge list")->required();
  d->add_option("--q", detect.config.q, "number of communities")->required();
  d->add_option("--truth", detect.truth, "ground-truth labels, one per line");
  d->add_option("--index-base", detect.index_base, "node ids: auto, 0 or 1")
      ->check(CLI::IsMember({"auto", "0", "1"}))
      ->capture_default_str();
  d->add_option("--output", detect.output, "write the report here instead of standard output");
  d->add_option("--format", detect.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}))->capture_default_str();
  d->add_flag("--no-trace", detect.no_trace, "omit the objective trace from the report");
  add_solver_options(d, detect.config);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "compare a labeling with ground truth");
  e->add_option("--pred", eval.pred, "predicted labels")->required();
  e->add_option("--truth", eval.truth, "ground-truth labels")->required();
  e->add_option("--graph", eval.graph, "edge list, for modularity");
  e->add_option("--index-base", eval.index_base, "node ids: auto, 0 or 1")
      ->check(CLI::IsMember({"auto", "0", "1"}))
      ->capture_default_str();

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a synthetic graph and its ground truth");
  add_generator_options(g, gen, true);
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--out-prefix", gen.out_prefix, "writes <prefix>.edges and <prefix>.truth")->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "run the solver and the Louvain baseline on one instance");
  add_generator_options(b, bench.gen, false);
  b->add_option("--out-prefix", bench.gen.out_prefix, "also write the generated instance");
  b->add_option("--input", bench.input, "edge list instead of a generated graph");
  b->add_option("--truth", bench.truth, "ground truth for --input");
  b->add_option("--index-base", bench.index_base, "node ids: auto, 0 or 1")
      ->check(CLI::IsMember({"auto", "0", "1"}))
      ->capture_default_str();
  b->add_option("--q", bench.config.q, "number of communities for the solver")->capture_default_str();
  b->add_option("--louvain-runs", bench.louvain_runs, "Louvain seeds, best modularity kept")->capture_default_str();
  b->add_flag("--louvain-only", bench.skip_arppg, "skip the Stiefel solver");
  add_solver_options(b, bench.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitInput;
  }

  try {
    if (*d) return run_detect(detect);
    if (*e) return run_eval(eval);
    if (*g) return run_generate(gen);
    if (*b) {
      if (!bench.input && (bench.gen.kind.empty() || bench.gen.sizes.empty())) {
        throw InputError("bench needs --input or --kind with --sizes");
      }
      if (bench.louvain_runs < 1) throw InputError("--louvain-runs must be positive");
      return run_bench(bench);
    }
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInput;
  } catch (const SolverError& err) {
    std::cerr << "solver failure: " << err.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& err) {
    std::cerr << "solver failure: " << err.what() << '\n';
    return kExitSolver;
  }
  return kExitInput;
}
