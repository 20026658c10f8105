// Command-line front end: dataset generation, simulated experiments,
// closure self-checks and the labeling service.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "poal/closure.hpp"
#include "poal/dataset.hpp"
#include "poal/experiment.hpp"
#include "poal/ground_truth.hpp"
#include "poal/service.hpp"

namespace fs = std::filesystem;
using namespace poal;

namespace {

int cmd_gen(const SyntheticParams& prm, const fs::path& out) {
  const Pool pool = generate_synthetic(prm);
  save_pool(pool, out);
  const QueryBounds b = query_bounds(pool.truth());
  std::cout << "nodes " << pool.num_nodes() << ", pairs " << pool.size() << ", dim " << pool.dim()
            << ", positive rate " << std::fixed << std::setprecision(3) << pool.positive_rate() << ", order size "
            << pool.truth().size() << ", reduction " << b.lower << '\n'
            << "wrote " << out << '\n';
  return 0;
}

struct RunArgs {
  fs::path config, dataset, out;
  std::vector<std::string> strategies;
  bool no_reasoning = false;
  std::optional<std::size_t> trials, budget, eval_every, forest_trees;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig base = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
  if (a.trials) base.n_trials = *a.trials;
  if (a.budget) base.budget = *a.budget;
  if (a.eval_every) base.eval_every = *a.eval_every;
  if (a.forest_trees) base.forest_trees = *a.forest_trees;
  if (a.seed) base.rng_seed = *a.seed;
  fs::path out = a.out.empty() ? base.output_dir : a.out;
  if (out.empty()) throw CLI::ValidationError("--out", "no output directory given");

  std::vector<Strategy> strategies;
  for (const auto& s : a.strategies) strategies.push_back(parse_strategy(s, a.no_reasoning));
  if (strategies.empty()) strategies.push_back(base.strategy);

  const Pool pool = load_pool_dir(a.dataset);
  std::cout << "pool: " << pool.size() << " pairs over " << pool.num_nodes() << " nodes\n";
  int status = 0;
  for (const Strategy& s : strategies) {
    ExperimentConfig cfg = base;
    cfg.strategy = s;
    cfg.validate();
    const fs::path dir = strategies.size() == 1 ? out : out / s.name();
    const ExperimentResult r = run_experiment(pool, cfg);
    write_outputs(r, dir);
    cfg.output_dir = dir;
    save_config(cfg, dir / "config.json");

    std::size_t errors = 0;
    for (const auto& t : r.traces) errors += t.soundness_errors;
    std::cout << std::left << std::setw(9) << s.name() << std::right;
    if (auto it = r.curves.find("auc"); it != r.curves.end())
      std::cout << " auc@" << r.checkpoints.back() << " " << std::fixed << std::setprecision(4)
                << it->second.back().mean << " +/- " << it->second.back().ci95;
    std::cout << "  labeled " << std::setprecision(1) << r.curves.at("labeled_count").back().mean;
    if (auto e = power_law_exponent(runtime_profile(r.traces)))
      std::cout << "  runtime exponent " << std::setprecision(2) << *e;
    std::cout << "  unsound " << errors << "  -> " << dir << '\n';
    if (errors) status = 1;
  }
  return status;
}

int cmd_bounds(const fs::path& dataset) {
  const fs::path edges = fs::is_directory(dataset) ? dataset / "edges.csv" : dataset;
  const GroundTruth g = load_ground_truth_csv(edges);
  const QueryBounds b = query_bounds(g);
  std::cout << "nodes " << g.num_nodes() << "\norder " << g.size() << "\nlower " << b.lower << "\nupper " << b.upper
            << '\n';
  return 0;
}

int cmd_closure_check(std::size_t cases, std::size_t max_nodes, std::uint64_t seed) {
  const ClosureCheckResult r = closure_check(cases, max_nodes, seed);
  std::cout << r.cases << " cases, " << r.labels << " labels, " << r.mismatches << " mismatches\n";
  return r.mismatches == 0 ? 0 : 1;
}

int cmd_replay(const fs::path& log, const fs::path& data) {
  const std::string ds = log_dataset(log);
  auto pool = std::make_shared<const Pool>(load_pool_dir(data / ds));
  const auto s = replay(log, pool, log.stem().string());
  std::cout << dump_closure_jsonl(s->closure());
  return 0;
}

HttpServer* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const fs::path& data, const fs::path& logs,
              const std::optional<fs::path>& ui) {
  OracleService svc({data, logs});
  const std::size_t resumed = svc.resume_all();
  HttpServer server(svc, ui);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "resumed " << resumed << " session(s); listening on " << host << ':' << port << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ':' << port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning of strict partial orders"};
  app.require_subcommand(1);

  SyntheticParams gen;
  fs::path gen_out;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--nodes", gen.num_nodes, "Number of nodes")->capture_default_str();
  g->add_option("--layers", gen.num_layers, "Number of layers")->capture_default_str();
  g->add_option("--edge-prob", gen.edge_prob, "Edge probability between layers")->capture_default_str();
  g->add_option("--dim", gen.embedding_dim, "Node embedding dimension")->capture_default_str();
  g->add_option("--noise", gen.noise, "Feature noise std-dev")->capture_default_str();
  g->add_option("--drift", gen.drift, "Embedding drift from parents")->capture_default_str();
  g->add_option("--pair-fraction", gen.pair_fraction, "Fraction of eligible pairs kept")->capture_default_str();
  g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  g->add_option("--out", gen_out, "Output directory")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run simulated active-learning trials");
  r->add_option("--config", run.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  r->add_option("--dataset", run.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  r->add_option("--out", run.out, "Output directory");
  r->add_option("--strategy", run.strategies, "random, lc, qbc, cnt, lc-r+ or qbc-r+ (repeatable)");
  r->add_flag("--no-reasoning", run.no_reasoning, "Plain variants without closure updates");
  r->add_option("--trials", run.trials, "Override n_trials");
  r->add_option("--budget", run.budget, "Override budget");
  r->add_option("--eval-every", run.eval_every, "Override eval_every");
  r->add_option("--forest-trees", run.forest_trees, "Override forest_trees");
  r->add_option("--seed", run.seed, "Override rng_seed");

  fs::path bounds_ds;
  auto* b = app.add_subcommand("bounds", "Query bounds of a ground-truth order");
  b->add_option("--dataset", bounds_ds, "Dataset directory or edges CSV")->required()->check(CLI::ExistingPath);

  std::size_t cc_cases = 1000, cc_nodes = 8;
  std::uint64_t cc_seed = 1;
  auto* cc = app.add_subcommand("closure-check", "Compare incremental closure with the fixpoint");
  cc->add_option("--n-cases", cc_cases, "Number of random cases")->capture_default_str();
  cc->add_option("--max-nodes", cc_nodes, "Largest node count")->capture_default_str()->check(CLI::Range(2, 64));
  cc->add_option("--seed", cc_seed, "RNG seed")->capture_default_str();

  fs::path rp_log, rp_data;
  auto* rp = app.add_subcommand("replay", "Rebuild a session from its log and print the closure");
  rp->add_option("--log", rp_log, "Session log")->required()->check(CLI::ExistingFile);
  rp->add_option("--data", rp_data, "Dataset root")->required()->check(CLI::ExistingDirectory);

  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path data, logs = "logs";
  std::optional<fs::path> ui;
  auto* sv = app.add_subcommand("serve", "Serve labeling sessions over HTTP");
  sv->add_option("--host", host, "Bind address")->capture_default_str();
  sv->add_option("--port", port, "Port")->capture_default_str();
  sv->add_option("--data", data, "Dataset root (one directory per dataset)")->required()->check(CLI::ExistingDirectory);
  sv->add_option("--logs", logs, "Session log directory")->capture_default_str();
  sv->add_option("--ui-dir", ui, "Static UI assets")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) return cmd_gen(gen, gen_out);
    if (*r) return cmd_run(run);
    if (*b) return cmd_bounds(bounds_ds);
    if (*cc) return cmd_closure_check(cc_cases, cc_nodes, cc_seed);
    if (*rp) return cmd_replay(rp_log, rp_data);
    if (*sv) return cmd_serve(host, port, data, logs, ui);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
