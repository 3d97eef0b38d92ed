#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "neuroglue/datagen.hpp"
#include "neuroglue/eval.hpp"
#include "neuroglue/extract.hpp"
#include "neuroglue/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace neuroglue;

namespace {

struct SolverFlags {
  std::optional<std::uint64_t> conflicts;
  std::optional<double> seconds;
  double kappa = 1e4;
  double temperature = 4.0;
  std::int64_t base = 50000;
  std::int64_t quad = 1000;
  std::int64_t cap = 250000;
  std::string warmup = "conflicts";
  std::uint64_t warmup_conflicts = 1000;
  double warmup_seconds = 15.0;
  double ema_ratio = 1.1;
  std::size_t edge_cap = 10'000'000;

  void add(CLI::App* app) {
    app->add_option("--conflicts", conflicts, "Conflict budget");
    app->add_option("--seconds", seconds, "Wall-clock budget");
    app->add_option("--kappa", kappa, "Refocus score scale")->capture_default_str();
    app->add_option("--temperature", temperature, "Softmax temperature")->capture_default_str();
    app->add_option("--refocus-base", base, "Refocus schedule base")->capture_default_str();
    app->add_option("--refocus-quad", quad, "Refocus schedule quadratic term")
        ->capture_default_str();
    app->add_option("--refocus-cap", cap, "Refocus schedule cap")->capture_default_str();
    app->add_option("--warmup", warmup, "Warm-up mode")
        ->check(CLI::IsMember({"conflicts", "seconds"}))
        ->capture_default_str();
    app->add_option("--warmup-conflicts", warmup_conflicts)->capture_default_str();
    app->add_option("--warmup-seconds", warmup_seconds)->capture_default_str();
    app->add_option("--ema-ratio", ema_ratio, "Glue EMA gate for refocusing")
        ->capture_default_str();
    app->add_option("--edge-cap", edge_cap, "Maximum graph edges for refocusing")
        ->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig c;
    c.refocus.kappa = kappa;
    c.refocus.temperature = temperature;
    c.refocus.schedule = {base, quad, cap};
    c.refocus.warmup_mode = warmup == "seconds" ? WarmupMode::kWallClock : WarmupMode::kConflicts;
    c.refocus.warmup_conflicts = warmup_conflicts;
    c.refocus.warmup_seconds = warmup_seconds;
    c.refocus.ema_ratio = ema_ratio;
    c.refocus.edge_cap = edge_cap;
    return c;
  }

  Budget budget() const {
    Budget b;
    b.conflicts = conflicts;
    b.seconds = seconds;
    return b;
  }
};

struct HyperFlags {
  std::string preset;
  std::optional<int> literal_dim, clause_dim, iterations, literal_layers, clause_layers,
      policy_layers;
  std::optional<double> dropout;

  void add(CLI::App* app, const std::string& default_preset) {
    preset = default_preset;
    app->add_option("--preset", preset, "Hyperparameter preset")
        ->check(CLI::IsMember({"supervised", "rl"}))
        ->capture_default_str();
    app->add_option("--literal-dim", literal_dim);
    app->add_option("--clause-dim", clause_dim);
    app->add_option("--iterations", iterations);
    app->add_option("--literal-layers", literal_layers);
    app->add_option("--clause-layers", clause_layers);
    app->add_option("--policy-layers", policy_layers);
    app->add_option("--dropout", dropout);
  }

  HyperParams resolve() const {
    HyperParams h = preset == "rl" ? HyperParams::rl() : HyperParams::supervised();
    if (literal_dim) h.literal_dim = *literal_dim;
    if (clause_dim) h.clause_dim = *clause_dim;
    if (iterations) h.iterations = *iterations;
    if (literal_layers) h.literal_layers = *literal_layers;
    if (clause_layers) h.clause_layers = *clause_layers;
    if (policy_layers) h.policy_layers = *policy_layers;
    if (dropout) h.dropout = *dropout;
    h.validate();
    return h;
  }
};

json stats_json(const SolveStats& s) {
  return {{"decisions", s.decisions},     {"conflicts", s.conflicts},
          {"propagations", s.propagations}, {"restarts", s.restarts},
          {"reductions", s.reductions},   {"refocuses", s.refocuses},
          {"refocus_skips", s.refocus_skips}, {"learned", s.learned},
          {"avg_glue", s.avg_glue()},     {"glr", s.glr()},
          {"seconds", s.seconds}};
}

std::vector<Formula> load_formulas(const fs::path& dir) {
  std::vector<Formula> out;
  for (auto& inst : load_instances(dir)) out.push_back(std::move(inst.formula));
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_solve(const std::string& path, const std::string& variant_name,
              const std::string& weights, std::uint64_t seed, bool print_model,
              const SolverFlags& flags) {
  const Formula f = read_dimacs_file(path);
  const Variant variant = parse_variant(variant_name);
  std::optional<std::pair<NetParams, HyperParams>> net;
  RefocusOracle oracle;
  if (variant == Variant::kNeuro) {
    if (weights.empty()) throw Error("solve: --weights is required for the neuro variant");
    net = load_weights(weights);
    oracle = make_neuro_oracle(net->first, net->second);
  } else if (variant == Variant::kRandom) {
    oracle = make_random_oracle(seed);
  }
  Solver solver(f, flags.config());
  const auto result = solver.solve(flags.budget(), oracle ? &oracle : nullptr);

  json out = stats_json(result.stats);
  out["status"] = to_string(result.status);
  out["variant"] = variant_name;
  out["seed"] = seed;
  out["num_vars"] = f.num_vars;
  out["num_clauses"] = f.clauses.size();
  if (print_model && result.status == Status::kSat) {
    std::vector<int> model;
    for (int v = 1; v <= f.num_vars; ++v) model.push_back(result.model[v - 1] ? v : -v);
    out["model"] = model;
  }
  std::cout << out.dump() << std::endl;
  switch (result.status) {
    case Status::kSat: return 10;
    case Status::kUnsat: return 20;
    case Status::kUnknown: return 0;
  }
  return 0;
}

int run_extract(const std::string& path, const std::string& assign, std::size_t edge_cap,
                const std::string& output) {
  const Formula f = read_dimacs_file(path);
  Solver solver(f);
  if (!solver.consistent() || solver.propagate()) throw Error("extract: root conflict");
  for (const auto& item : split_list(assign)) {
    const Literal lit = Literal::from_dimacs(std::stoi(item));
    if (lit.var() > f.num_vars) throw Error("extract: literal out of range: " + item);
    const int v = solver.value(lit);
    if (v < 0) throw Error("extract: assignment contradicts literal " + item);
    if (v > 0) continue;
    solver.decide(lit);
    if (solver.propagate()) throw Error("extract: assignment leads to a conflict");
  }
  const auto g = extract_graph(solver, edge_cap);
  if (!g) throw Error("extract: graph exceeds the edge cap");

  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw Error("cannot write " + output);
  }
  std::ostream& out = output.empty() ? std::cout : file;
  out << "c clauses " << g->num_clauses << " vars " << g->num_vars << " edges "
      << g->edges.size() << '\n';
  out << "m";
  for (int v : g->var_map) out << ' ' << v;
  out << '\n';
  for (const auto& e : g->edges) out << e.row << ' ' << e.col << '\n';
  return 0;
}

int run_train_supervised(const std::string& data, const std::string& out_path,
                         const HyperFlags& hf, SupervisedConfig config,
                         const std::string& metrics, const std::string& init) {
  const auto dataset = load_dataset(data);
  if (dataset.empty()) throw Error("train-supervised: dataset is empty");
  const HyperParams h = hf.resolve();
  std::optional<NetParams> initial;
  if (!init.empty()) initial = load_weights(init, h).first;

  std::ofstream log;
  if (!metrics.empty()) {
    log.open(metrics);
    if (!log) throw Error("cannot write " + metrics);
    log << "epoch,kl\n";
  }
  config.on_epoch = [&](int epoch, double kl) {
    std::cerr << "epoch " << epoch << " kl " << kl << '\n';
    if (log.is_open()) log << epoch << ',' << kl << '\n' << std::flush;
  };
  const auto result = train_supervised(dataset, h, config, std::move(initial));
  save_weights(out_path, result.params, h);
  json summary = {{"examples", dataset.size()},
                  {"epochs", config.epochs},
                  {"final_kl", result.epoch_kl.empty() ? 0.0 : result.epoch_kl.back()},
                  {"eval_kl", mean_kl(result.params, h, dataset)},
                  {"weights", out_path}};
  std::cout << summary.dump() << std::endl;
  return 0;
}

int run_train_rl(const std::string& dir, const std::string& out_path, const HyperFlags& hf,
                 RlConfig config, const std::string& metrics, const std::string& init) {
  const auto formulas = load_formulas(dir);
  HyperParams h = hf.resolve();
  h.value_head = true;
  std::optional<NetParams> initial;
  if (!init.empty()) initial = load_weights(init, h).first;

  std::ofstream log;
  if (!metrics.empty()) {
    log.open(metrics);
    if (!log) throw Error("cannot write " + metrics);
    log << "batch,policy_loss,value_loss,total,mean_return\n";
  }
  config.checkpoint_path = out_path;
  config.on_batch = [&](int batch, const ReinforceTerms& t) {
    if (log.is_open()) {
      log << batch << ',' << t.policy_loss << ',' << t.value_loss << ',' << t.total << ','
          << t.mean_return << '\n'
          << std::flush;
    }
  };
  const auto params = train_rl(formulas, h, config, std::move(initial));
  save_weights(out_path, params, h);
  std::cout << json{{"formulas", formulas.size()}, {"batches", config.batches},
                    {"weights", out_path}}
                   .dump()
            << std::endl;
  return 0;
}

int run_env_rollout(const std::string& path, const std::string& policy,
                    const std::string& actions, std::optional<bool> polarity,
                    std::uint64_t seed, int episodes, const std::string& weights) {
  const Formula f = read_dimacs_file(path);
  EnvConfig ec;
  ec.forced_polarity = polarity;
  RlEnv env(ec);
  std::optional<std::pair<NetParams, HyperParams>> net;
  if (policy == "policy") {
    if (weights.empty()) throw Error("env-rollout: --weights is required for --policy policy");
    net = load_weights(weights);
  }
  const auto script = split_list(actions);
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    env.reset(f, rng.next());
    Rng chooser_rng = rng.split();
    std::size_t cursor = 0;
    double total = 0.0;
    std::cout << "episode " << e << '\n';
    while (!env.done()) {
      const auto& obs = env.observation();
      int action = 0;
      if (policy == "scripted") {
        if (cursor >= script.size()) throw Error("env-rollout: script ran out of actions");
        const int var = std::stoi(script[cursor++]);
        const auto it = std::find(obs.var_map.begin(), obs.var_map.end(), var);
        if (it == obs.var_map.end()) {
          throw Error("env-rollout: variable " + std::to_string(var) + " is not free");
        }
        action = static_cast<int>(it - obs.var_map.begin());
      } else if (policy == "policy") {
        action = sample_from_policy(net->first, net->second)(obs, chooser_rng).first;
      } else {
        action = uniform_random_policy()(obs, chooser_rng).first;
      }
      const auto r = env.step(action);
      total += r.reward;
      std::printf("%d %s %.17g\n", r.var, r.polarity ? "true" : "false", r.reward);
    }
    std::cout << "return " << total << " terminal "
              << (env.terminal() == Terminal::kSatisfied ? "satisfied" : "conflict") << '\n';
  }
  return 0;
}

int run_gen_ksat(const std::string& dir, int n, int m, int k, int count, std::uint64_t seed) {
  fs::create_directories(dir);
  Rng master(seed);
  for (int i = 0; i < count; ++i) {
    const Formula f = random_ksat(n, m, k, master.fork(static_cast<std::uint64_t>(i)).next());
    char name[64];
    std::snprintf(name, sizeof name, "ksat_n%d_m%d_%04d.cnf", n, m, i);
    write_dimacs_file((fs::path(dir) / name).string(), f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neuroglue: CDCL solver with learned periodic refocusing"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Solve a DIMACS CNF file");
  std::string solve_path, solve_variant = "vanilla", solve_weights;
  std::uint64_t solve_seed = 1;
  bool solve_model = false;
  SolverFlags solve_flags;
  solve->add_option("input", solve_path, "DIMACS file")->required();
  solve->add_option("--mode,--variant", solve_variant, "vanilla, neuro or random")
      ->check(CLI::IsMember({"vanilla", "neuro", "random"}))
      ->capture_default_str();
  solve->add_option("--weights", solve_weights, "NGW1 weight file for the neuro mode");
  solve->add_option("--seed", solve_seed)->capture_default_str();
  solve->add_flag("--model", solve_model, "Include the model in the output");
  solve_flags.add(solve);

  // extract
  auto* extract = app.add_subcommand("extract", "Print the residual clause-literal graph");
  std::string extract_path, extract_assign, extract_out;
  std::size_t extract_cap = 10'000'000;
  extract->add_option("input", extract_path, "DIMACS file")->required();
  extract->add_option("--assign", extract_assign, "Comma-separated DIMACS literals to assign");
  extract->add_option("--edge-cap", extract_cap)->capture_default_str();
  extract->add_option("-o,--output", extract_out, "Output file (default stdout)");

  // train-supervised
  auto* ts = app.add_subcommand("train-supervised", "Fit the network to glue-count labels");
  std::string ts_data, ts_out, ts_metrics, ts_init;
  HyperFlags ts_hyper;
  SupervisedConfig ts_config;
  ts->add_option("--data", ts_data, "Dataset directory written by datagen")->required();
  ts->add_option("-o,--output", ts_out, "Output weight file")->required();
  ts->add_option("--epochs", ts_config.epochs)->capture_default_str();
  ts->add_option("--batch-size", ts_config.batch_size)->capture_default_str();
  ts->add_option("--lr", ts_config.lr)->capture_default_str();
  ts->add_option("--seed", ts_config.seed)->capture_default_str();
  ts->add_option("--average-start", ts_config.average_start)->capture_default_str();
  ts->add_option("--metrics", ts_metrics, "CSV log of the per-epoch KL");
  ts->add_option("--init", ts_init, "Initial weights");
  ts_hyper.add(ts, "supervised");

  // train-rl
  auto* tr = app.add_subcommand("train-rl", "Train the policy with REINFORCE");
  std::string tr_dir, tr_out, tr_metrics, tr_init;
  HyperFlags tr_hyper;
  RlConfig tr_config;
  tr->add_option("--formulas", tr_dir, "Directory of DIMACS training formulas")->required();
  tr->add_option("-o,--output", tr_out, "Output (and checkpoint) weight file")->required();
  tr->add_option("--batches", tr_config.batches)->capture_default_str();
  tr->add_option("--workers", tr_config.workers)->capture_default_str();
  tr->add_option("--episodes", tr_config.episodes_per_worker, "Episodes per worker")
      ->capture_default_str();
  tr->add_option("--grad-steps", tr_config.grad_steps)->capture_default_str();
  tr->add_option("--lr", tr_config.lr)->capture_default_str();
  tr->add_option("--max-grad-norm", tr_config.max_grad_norm)->capture_default_str();
  tr->add_option("--seed", tr_config.seed)->capture_default_str();
  tr->add_option("--metrics", tr_metrics, "CSV log of the per-batch loss terms");
  tr->add_option("--init", tr_init, "Initial weights");
  tr_hyper.add(tr, "rl");

  // datagen
  auto* dg = app.add_subcommand("datagen", "Generate glue-count training data");
  std::string dg_in, dg_out;
  DatagenConfig dg_config;
  std::optional<std::uint64_t> dg_conflicts;
  std::optional<double> dg_seconds;
  bool dg_no_augment = false;
  dg->add_option("--input", dg_in, "Directory of DIMACS files")->required();
  dg->add_option("--output", dg_out, "Output directory")->required();
  dg->add_option("--conflicts", dg_conflicts, "Conflict budget per solve (default 20000)");
  dg->add_option("--seconds", dg_seconds, "Wall-clock budget per solve");
  dg->add_option("--dump-interval", dg_config.dump_interval)->capture_default_str();
  dg->add_flag("--no-augment", dg_no_augment, "Skip learned-clause dumps");
  dg->add_option("--max-clauses", dg_config.max_clauses)->capture_default_str();
  dg->add_option("--seed", dg_config.seed)->capture_default_str();
  dg->add_option("--workers", dg_config.workers)->capture_default_str();

  // env-rollout
  auto* er = app.add_subcommand("env-rollout", "Trace episodes of the branching environment");
  std::string er_path, er_policy = "random", er_actions, er_weights;
  std::optional<bool> er_polarity;
  std::uint64_t er_seed = 1;
  int er_episodes = 1;
  er->add_option("input", er_path, "DIMACS file")->required();
  er->add_option("--policy", er_policy, "random, scripted or policy")
      ->check(CLI::IsMember({"random", "scripted", "policy"}))
      ->capture_default_str();
  er->add_option("--actions", er_actions, "Comma-separated variables for --policy scripted");
  er->add_option("--polarity", er_polarity, "Force every assignment to this polarity");
  er->add_option("--weights", er_weights, "Weights for --policy policy");
  er->add_option("--seed", er_seed)->capture_default_str();
  er->add_option("--episodes", er_episodes)->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Benchmark solver variants");
  std::string b_instances, b_out, b_variants = "vanilla,neuro,random", b_seeds = "1",
                                  b_weights;
  double b_timeout = 60.0;
  int b_workers = 1;
  SolverFlags b_flags;
  bench->add_option("--instances", b_instances, "Directory of DIMACS files")->required();
  bench->add_option("--output", b_out, "Output directory")->required();
  bench->add_option("--variants", b_variants)->capture_default_str();
  bench->add_option("--seeds", b_seeds, "Comma-separated seeds")->capture_default_str();
  bench->add_option("--timeout", b_timeout, "Per-run time limit in seconds (PAR-2 timeout)")
      ->capture_default_str();
  bench->add_option("--weights", b_weights, "Weights for the neuro variant");
  bench->add_option("--workers", b_workers)->capture_default_str();
  b_flags.add(bench);
  bench->remove_option(bench->get_option("--seconds"));

  // gen-ksat
  auto* gen = app.add_subcommand("gen-ksat", "Write random k-SAT instances");
  std::string gen_out;
  int gen_n = 100, gen_m = 426, gen_k = 3, gen_count = 10;
  std::uint64_t gen_seed = 1;
  gen->add_option("--output", gen_out, "Output directory")->required();
  gen->add_option("-n,--vars", gen_n)->capture_default_str();
  gen->add_option("-m,--clauses", gen_m)->capture_default_str();
  gen->add_option("-k,--width", gen_k)->capture_default_str();
  gen->add_option("--count", gen_count)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      return run_solve(solve_path, solve_variant, solve_weights, solve_seed, solve_model,
                       solve_flags);
    }
    if (*extract) return run_extract(extract_path, extract_assign, extract_cap, extract_out);
    if (*ts) return run_train_supervised(ts_data, ts_out, ts_hyper, ts_config, ts_metrics, ts_init);
    if (*tr) return run_train_rl(tr_dir, tr_out, tr_hyper, tr_config, tr_metrics, tr_init);
    if (*dg) {
      if (dg_conflicts || dg_seconds) {
        dg_config.budget = Budget{};
        dg_config.budget.conflicts = dg_conflicts;
        dg_config.budget.seconds = dg_seconds;
      }
      dg_config.augment = !dg_no_augment;
      const auto manifest = build_dataset(dg_in, dg_out, dg_config);
      std::cout << json{{"examples", manifest.size()}, {"output", dg_out}}.dump() << std::endl;
      return 0;
    }
    if (*er) {
      return run_env_rollout(er_path, er_policy, er_actions, er_polarity, er_seed, er_episodes,
                             er_weights);
    }
    if (*bench) {
      BenchConfig config;
      config.variants.clear();
      for (const auto& v : split_list(b_variants)) config.variants.push_back(parse_variant(v));
      config.seeds.clear();
      for (const auto& s : split_list(b_seeds)) config.seeds.push_back(std::stoull(s));
      config.budget = b_flags.budget();
      config.budget.seconds = b_timeout;
      config.solver = b_flags.config();
      config.workers = b_workers;
      if (!b_weights.empty()) {
        auto [p, h] = load_weights(b_weights);
        config.weights = std::move(p);
        config.hyper = h;
      }
      fs::create_directories(b_out);
      config.records_path = fs::path(b_out) / "records.csv";
      const auto records = run_benchmark(load_instances(b_instances), config);
      write_reports(b_out, records, b_timeout);
      std::cout << json{{"records", records.size()}, {"output", b_out}}.dump() << std::endl;
      return 0;
    }
    if (*gen) return run_gen_ksat(gen_out, gen_n, gen_m, gen_k, gen_count, gen_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
