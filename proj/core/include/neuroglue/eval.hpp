#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neuroglue/cnf.hpp"
#include "neuroglue/net.hpp"
#include "neuroglue/rng.hpp"
#include "neuroglue/solver.hpp"

namespace neuroglue {

enum class Variant { kVanilla, kNeuro, kRandom };

const char* to_string(Variant v);
Variant parse_variant(std::string_view name);
Status parse_status(std::string_view name);

struct EvalRecord {
  std::string instance;
  Variant variant = Variant::kVanilla;
  std::uint64_t seed = 0;
  Status status = Status::kUnknown;
  double runtime = 0.0;  // seconds
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  double avg_glue = 0.0;
  double glr = 0.0;

  bool solved() const { return status != Status::kUnknown; }
};

struct Instance {
  std::string id;  // must not contain commas
  Formula formula;
};

// Every regular file of `dir` in name order, keyed by file name.
std::vector<Instance> load_instances(const std::filesystem::path& dir);

struct BenchConfig {
  std::vector<Variant> variants{Variant::kVanilla, Variant::kNeuro, Variant::kRandom};
  std::vector<std::uint64_t> seeds{1};
  Budget budget{.conflicts = 200'000, .decisions = std::nullopt, .seconds = 60.0};
  SolverConfig solver;
  std::optional<NetParams> weights;
  HyperParams hyper = HyperParams::supervised();
  int workers = 1;
  // Completed (instance, variant, seed) keys in this file are skipped and new
  // records are appended to it.
  std::filesystem::path records_path;
};

RefocusOracle make_neuro_oracle(const NetParams& p, const HyperParams& h);
// Logits drawn uniformly from [0, 1); each run needs its own oracle.
RefocusOracle make_random_oracle(std::uint64_t seed);

EvalRecord run_instance(const Instance& instance, Variant variant, std::uint64_t seed,
                        const BenchConfig& config);

// One record per (instance, variant, seed), ordered by instance, then
// variant, then seed.
std::vector<EvalRecord> run_benchmark(const std::vector<Instance>& instances,
                                      const BenchConfig& config);

struct AggregateRecord {
  std::string instance;
  Variant variant = Variant::kVanilla;
  int runs = 0;
  bool solved = false;
  Status status = Status::kUnknown;  // verdict of the successful runs
  double mean_successful_runtime = 0.0;
  double mean_successful_decisions = 0.0;
  double mean_runtime = 0.0;
  double mean_decisions = 0.0;
  double mean_conflicts = 0.0;
  double mean_avg_glue = 0.0;
  double mean_glr = 0.0;
};

// Throws Error if an instance has both SAT and UNSAT verdicts.
std::vector<AggregateRecord> aggregate(const std::vector<EvalRecord>& records);

struct Par2Score {
  Variant variant = Variant::kVanilla;
  double all = 0.0;
  double sat = 0.0;
  double unsat = 0.0;
  std::size_t instances = 0;
  std::size_t sat_instances = 0;
  std::size_t unsat_instances = 0;
};

// Normalized PAR-2 per variant. The SAT/UNSAT splits cover the instances
// whose verdict any variant established; an empty split scores 0.
std::vector<Par2Score> par2(const std::vector<AggregateRecord>& aggregates, double timeout);

enum class Metric { kGlr, kAvgGlue };

struct PairwiseRow {
  Variant a = Variant::kVanilla;
  Variant b = Variant::kVanilla;
  Metric metric = Metric::kGlr;
  double a_better = 0.5;
  double b_better = 0.5;
  std::size_t instances = 0;
};

// For each variant pair, the fraction of shared instances on which each side
// is strictly better (higher GLR, lower average glue); ties count half.
std::vector<PairwiseRow> pairwise_better_fraction(const std::vector<AggregateRecord>& aggregates,
                                                  Metric metric);

enum class CactusAxis { kRuntime, kDecisions };

struct CactusRow {
  Variant variant = Variant::kVanilla;
  int solved = 0;
  double cost = 0.0;
};

std::vector<CactusRow> cactus_rows(const std::vector<AggregateRecord>& aggregates,
                                   CactusAxis axis);

void write_records_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records_csv(const std::filesystem::path& path);
void write_aggregates_csv(const std::filesystem::path& path,
                          const std::vector<AggregateRecord>& aggregates);
void write_par2(const std::filesystem::path& path, const std::vector<Par2Score>& scores,
                double timeout);
void write_pairwise_csv(const std::filesystem::path& path, const std::vector<PairwiseRow>& rows);
void cactus_csv(const std::vector<AggregateRecord>& aggregates, CactusAxis axis,
                const std::filesystem::path& path);

// aggregates.csv, par2.txt, pairwise.csv, cactus_runtime.csv and
// cactus_decisions.csv under `dir`.
void write_reports(const std::filesystem::path& dir, const std::vector<EvalRecord>& records,
                   double timeout);

}  // namespace neuroglue
