#include "neuroglue/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace neuroglue {

namespace fs = std::filesystem;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kVanilla: return "vanilla";
    case Variant::kNeuro: return "neuro";
    case Variant::kRandom: return "random";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "vanilla") return Variant::kVanilla;
  if (name == "neuro") return Variant::kNeuro;
  if (name == "random") return Variant::kRandom;
  throw Error("unknown variant '" + std::string(name) + "'");
}

Status parse_status(std::string_view name) {
  for (Status s : {Status::kSat, Status::kUnsat, Status::kUnknown}) {
    if (name == to_string(s)) return s;
  }
  throw Error("unknown status '" + std::string(name) + "'");
}

std::vector<Instance> load_instances(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Instance> out;
  for (const auto& f : files) {
    const std::string id = f.filename().string();
    if (id.find(',') != std::string::npos) throw Error("instance name contains a comma: " + id);
    out.push_back({id, read_dimacs_file(f.string())});
  }
  return out;
}

RefocusOracle make_neuro_oracle(const NetParams& p, const HyperParams& h) {
  return [&p, h](const SparseGraph& g) { return forward(p, h, g).policy_logits; };
}

RefocusOracle make_random_oracle(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const SparseGraph& g) {
    std::vector<double> logits(static_cast<std::size_t>(g.num_vars));
    for (double& x : logits) x = rng->uniform();
    return logits;
  };
}

EvalRecord run_instance(const Instance& instance, Variant variant, std::uint64_t seed,
                        const BenchConfig& config) {
  RefocusOracle oracle;
  if (variant == Variant::kNeuro) {
    if (!config.weights) throw Error("bench: the neuro variant needs weights");
    oracle = make_neuro_oracle(*config.weights, config.hyper);
  } else if (variant == Variant::kRandom) {
    oracle = make_random_oracle(seed);
  }
  Solver solver(instance.formula, config.solver);
  const auto start = std::chrono::steady_clock::now();
  const auto result = solver.solve(config.budget, oracle ? &oracle : nullptr);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  EvalRecord r;
  r.instance = instance.id;
  r.variant = variant;
  r.seed = seed;
  r.status = result.status;
  r.runtime = elapsed;
  r.decisions = result.stats.decisions;
  r.conflicts = result.stats.conflicts;
  r.avg_glue = result.stats.avg_glue();
  r.glr = result.stats.glr();
  return r;
}

namespace {

using Key = std::tuple<std::string, Variant, std::uint64_t>;

Key key_of(const EvalRecord& r) { return {r.instance, r.variant, r.seed}; }

constexpr const char* kRecordHeader =
    "instance,variant,seed,status,runtime,decisions,conflicts,avg_glue,glr";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string record_line(const EvalRecord& r) {
  std::ostringstream s;
  s << r.instance << ',' << to_string(r.variant) << ',' << r.seed << ',' << to_string(r.status)
    << ',' << format_double(r.runtime) << ',' << r.decisions << ',' << r.conflicts << ','
    << format_double(r.avg_glue) << ',' << format_double(r.glr);
  return s.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream s(line);
  while (std::getline(s, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double mean(double sum, int n) { return n == 0 ? 0.0 : sum / n; }

}  // namespace

std::vector<EvalRecord> run_benchmark(const std::vector<Instance>& instances,
                                      const BenchConfig& config) {
  if (config.seeds.empty() || config.variants.empty()) {
    throw Error("bench: need at least one variant and one seed");
  }
  const bool neuro = std::find(config.variants.begin(), config.variants.end(),
                               Variant::kNeuro) != config.variants.end();
  if (neuro && !config.weights) throw Error("bench: the neuro variant needs weights");

  std::map<Key, EvalRecord> done;
  const bool persist = !config.records_path.empty();
  if (persist && fs::exists(config.records_path)) {
    for (auto& r : read_records_csv(config.records_path)) done.emplace(key_of(r), std::move(r));
  }

  std::vector<Key> jobs;
  std::vector<Key> todo;
  for (const auto& inst : instances) {
    for (Variant v : config.variants) {
      for (auto seed : config.seeds) {
        jobs.emplace_back(inst.id, v, seed);
        if (!done.count(jobs.back())) todo.push_back(jobs.back());
      }
    }
  }
  std::map<std::string, const Instance*> by_id;
  for (const auto& inst : instances) by_id[inst.id] = &inst;

  std::ofstream sink;
  if (persist && !todo.empty()) {
    const bool fresh = !fs::exists(config.records_path) || fs::file_size(config.records_path) == 0;
    sink.open(config.records_path, std::ios::app);
    if (!sink) throw Error("cannot write " + config.records_path.string());
    if (fresh) sink << kRecordHeader << '\n' << std::flush;
  }

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      const auto& [id, variant, seed] = todo[i];
      try {
        auto r = run_instance(*by_id.at(id), variant, seed, config);
        std::lock_guard lock(mutex);
        if (sink.is_open()) sink << record_line(r) << '\n' << std::flush;
        done.emplace(todo[i], std::move(r));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, config.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<EvalRecord> out;
  out.reserve(jobs.size());
  for (const auto& k : jobs) out.push_back(done.at(k));
  return out;
}

std::vector<AggregateRecord> aggregate(const std::vector<EvalRecord>& records) {
  std::map<std::string, std::set<Status>> verdicts;
  for (const auto& r : records) {
    if (r.solved()) verdicts[r.instance].insert(r.status);
  }
  for (const auto& [id, set] : verdicts) {
    if (set.size() > 1) throw Error("aggregate: instance " + id + " is both SAT and UNSAT");
  }

  std::map<std::pair<std::string, Variant>, std::vector<const EvalRecord*>> groups;
  std::vector<std::pair<std::string, Variant>> order;
  for (const auto& r : records) {
    auto k = std::make_pair(r.instance, r.variant);
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&r);
  }

  std::vector<AggregateRecord> out;
  for (const auto& k : order) {
    const auto& runs = groups[k];
    AggregateRecord a;
    a.instance = k.first;
    a.variant = k.second;
    a.runs = static_cast<int>(runs.size());
    int ok = 0;
    double ok_time = 0, ok_dec = 0, time = 0, dec = 0, confl = 0, glue = 0, glr = 0;
    for (const auto* r : runs) {
      if (r->solved()) {
        ++ok;
        ok_time += r->runtime;
        ok_dec += static_cast<double>(r->decisions);
        a.status = r->status;
      }
      time += r->runtime;
      dec += static_cast<double>(r->decisions);
      confl += static_cast<double>(r->conflicts);
      glue += r->avg_glue;
      glr += r->glr;
    }
    a.solved = ok > 0;
    a.mean_successful_runtime = mean(ok_time, ok);
    a.mean_successful_decisions = mean(ok_dec, ok);
    a.mean_runtime = mean(time, a.runs);
    a.mean_decisions = mean(dec, a.runs);
    a.mean_conflicts = mean(confl, a.runs);
    a.mean_avg_glue = mean(glue, a.runs);
    a.mean_glr = mean(glr, a.runs);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Par2Score> par2(const std::vector<AggregateRecord>& aggregates, double timeout) {
  std::map<std::string, Status> verdict;
  for (const auto& a : aggregates) {
    if (a.solved) verdict[a.instance] = a.status;
  }
  std::map<Variant, Par2Score> scores;
  for (const auto& a : aggregates) {
    auto& s = scores[a.variant];
    s.variant = a.variant;
    const double cost = a.solved ? a.mean_successful_runtime : 2.0 * timeout;
    s.all += cost;
    ++s.instances;
    const auto it = verdict.find(a.instance);
    if (it == verdict.end()) continue;
    if (it->second == Status::kSat) {
      s.sat += cost;
      ++s.sat_instances;
    } else {
      s.unsat += cost;
      ++s.unsat_instances;
    }
  }
  std::vector<Par2Score> out;
  for (auto& [v, s] : scores) {
    if (s.instances) s.all /= static_cast<double>(s.instances);
    if (s.sat_instances) s.sat /= static_cast<double>(s.sat_instances);
    if (s.unsat_instances) s.unsat /= static_cast<double>(s.unsat_instances);
    out.push_back(s);
  }
  return out;
}

std::vector<PairwiseRow> pairwise_better_fraction(const std::vector<AggregateRecord>& aggregates,
                                                  Metric metric) {
  std::map<Variant, std::map<std::string, double>> values;
  for (const auto& a : aggregates) {
    values[a.variant][a.instance] = metric == Metric::kGlr ? a.mean_glr : a.mean_avg_glue;
  }
  std::vector<PairwiseRow> out;
  for (auto ia = values.begin(); ia != values.end(); ++ia) {
    for (auto ib = std::next(ia); ib != values.end(); ++ib) {
      PairwiseRow row;
      row.a = ia->first;
      row.b = ib->first;
      row.metric = metric;
      double a_wins = 0.0;
      for (const auto& [id, va] : ia->second) {
        const auto jt = ib->second.find(id);
        if (jt == ib->second.end()) continue;
        const double vb = jt->second;
        ++row.instances;
        const bool a_better = metric == Metric::kGlr ? va > vb : va < vb;
        const bool b_better = metric == Metric::kGlr ? vb > va : vb < va;
        a_wins += a_better ? 1.0 : (b_better ? 0.0 : 0.5);
      }
      if (row.instances) {
        row.a_better = a_wins / static_cast<double>(row.instances);
        row.b_better = 1.0 - row.a_better;
      }
      out.push_back(row);
    }
  }
  return out;
}

std::vector<CactusRow> cactus_rows(const std::vector<AggregateRecord>& aggregates,
                                   CactusAxis axis) {
  std::map<Variant, std::vector<double>> costs;
  for (const auto& a : aggregates) {
    auto& list = costs[a.variant];
    if (a.solved) {
      list.push_back(axis == CactusAxis::kRuntime ? a.mean_successful_runtime
                                                  : a.mean_successful_decisions);
    }
  }
  std::vector<CactusRow> out;
  for (auto& [v, list] : costs) {
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < list.size(); ++i) {
      out.push_back({v, static_cast<int>(i + 1), list[i]});
    }
  }
  return out;
}

void write_records_csv(const fs::path& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kRecordHeader << '\n';
  for (const auto& r : records) out << record_line(r) << '\n';
}

std::vector<EvalRecord> read_records_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  if (line != kRecordHeader) throw Error(path.string() + ": bad records header");
  std::vector<EvalRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 9) throw Error(path.string() + ": malformed record: " + line);
    EvalRecord r;
    try {
      r.instance = c[0];
      r.variant = parse_variant(c[1]);
      r.seed = std::stoull(c[2]);
      r.status = parse_status(c[3]);
      r.runtime = std::stod(c[4]);
      r.decisions = std::stoull(c[5]);
      r.conflicts = std::stoull(c[6]);
      r.avg_glue = std::stod(c[7]);
      r.glr = std::stod(c[8]);
    } catch (const std::logic_error&) {
      throw Error(path.string() + ": malformed record: " + line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_aggregates_csv(const fs::path& path, const std::vector<AggregateRecord>& aggregates) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "instance,variant,runs,solved,status,mean_successful_runtime,"
         "mean_successful_decisions,mean_runtime,mean_decisions,mean_conflicts,"
         "mean_avg_glue,mean_glr\n";
  for (const auto& a : aggregates) {
    out << a.instance << ',' << to_string(a.variant) << ',' << a.runs << ','
        << (a.solved ? 1 : 0) << ',' << to_string(a.status) << ','
        << format_double(a.mean_successful_runtime) << ','
        << format_double(a.mean_successful_decisions) << ',' << format_double(a.mean_runtime)
        << ',' << format_double(a.mean_decisions) << ',' << format_double(a.mean_conflicts)
        << ',' << format_double(a.mean_avg_glue) << ',' << format_double(a.mean_glr) << '\n';
  }
}

void write_par2(const fs::path& path, const std::vector<Par2Score>& scores, double timeout) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "timeout " << format_double(timeout) << '\n';
  for (const auto& s : scores) {
    out << to_string(s.variant) << " all " << format_double(s.all) << " (" << s.instances
        << ") sat " << format_double(s.sat) << " (" << s.sat_instances << ") unsat "
        << format_double(s.unsat) << " (" << s.unsat_instances << ")\n";
  }
}

void write_pairwise_csv(const fs::path& path, const std::vector<PairwiseRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "metric,a,b,a_better,b_better,instances\n";
  for (const auto& r : rows) {
    out << (r.metric == Metric::kGlr ? "glr" : "avg_glue") << ',' << to_string(r.a) << ','
        << to_string(r.b) << ',' << format_double(r.a_better) << ','
        << format_double(r.b_better) << ',' << r.instances << '\n';
  }
}

void cactus_csv(const std::vector<AggregateRecord>& aggregates, CactusAxis axis,
                const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "variant,solved,cost\n";
  for (const auto& r : cactus_rows(aggregates, axis)) {
    out << to_string(r.variant) << ',' << r.solved << ',' << format_double(r.cost) << '\n';
  }
}

void write_reports(const fs::path& dir, const std::vector<EvalRecord>& records, double timeout) {
  fs::create_directories(dir);
  const auto agg = aggregate(records);
  write_aggregates_csv(dir / "aggregates.csv", agg);
  write_par2(dir / "par2.txt", par2(agg, timeout), timeout);
  auto rows = pairwise_better_fraction(agg, Metric::kGlr);
  const auto glue = pairwise_better_fraction(agg, Metric::kAvgGlue);
  rows.insert(rows.end(), glue.begin(), glue.end());
  write_pairwise_csv(dir / "pairwise.csv", rows);
  cactus_csv(agg, CactusAxis::kRuntime, dir / "cactus_runtime.csv");
  cactus_csv(agg, CactusAxis::kDecisions, dir / "cactus_decisions.csv");
}

}  // namespace neuroglue
