#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neuroglue/cnf.hpp"
#include "neuroglue/solver.hpp"
#include "neuroglue/trainer.hpp"

namespace neuroglue {

inline Budget default_datagen_budget() { return Budget::of_conflicts(20'000); }

// Solves `f` without an oracle until the budget runs out (or it is decided)
// and labels its clause-literal graph with the solver's glue counts.
// Returns nullopt when no glue clause was learned.
std::optional<SupervisedExample> generate_datapoint(const Formula& f, const Budget& budget,
                                                    const SolverConfig& config = {});

// Every `dump_interval` conflicts of a single solve, the original clauses
// plus the live learned clauses are emitted as a new formula. Stops when
// the budget is spent or the formula is decided.
std::vector<Formula> augment(const Formula& f, std::uint64_t dump_interval,
                             const Budget& budget, const SolverConfig& config = {});

struct DatagenConfig {
  Budget budget = default_datagen_budget();
  std::uint64_t dump_interval = 5'000;
  bool augment = true;
  std::size_t max_clauses = 150'000;
  std::uint64_t seed = 1;
  int workers = 1;
  SolverConfig solver;
};

struct ManifestRow {
  std::string example_id;
  std::string source_file;
  std::string split_path;  // ';'-separated DIMACS literals fixed by splitting
  int dump_index = 0;      // 0 for the split piece itself, k for its k-th dump
  std::uint64_t seed = 0;

  bool operator==(const ManifestRow&) const = default;
};

// Processes every regular file of `input_dir` in name order. Each example
// is written as <id>.cnf and <id>.counts; manifest.csv lists all of them.
// Unreadable or malformed inputs are reported on stderr and skipped.
std::vector<ManifestRow> build_dataset(const std::filesystem::path& input_dir,
                                       const std::filesystem::path& output_dir,
                                       const DatagenConfig& config);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

void write_example(const std::filesystem::path& dir, const std::string& id, const Formula& f,
                   const std::vector<std::uint64_t>& counts);
// Loads every example listed in <dir>/manifest.csv.
std::vector<SupervisedExample> load_dataset(const std::filesystem::path& dir);

}  // namespace neuroglue
