#include "neuroglue/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace neuroglue {

namespace fs = std::filesystem;

std::optional<SupervisedExample> generate_datapoint(const Formula& f, const Budget& budget,
                                                    const SolverConfig& config) {
  Solver solver(f, config);
  const auto result = solver.solve(budget);
  if (std::all_of(result.glue_counts.begin(), result.glue_counts.end(),
                  [](std::uint64_t c) { return c == 0; })) {
    return std::nullopt;
  }
  return SupervisedExample{clause_literal_graph(f), result.glue_counts};
}

std::vector<Formula> augment(const Formula& f, std::uint64_t dump_interval,
                             const Budget& budget, const SolverConfig& config) {
  if (dump_interval < 1) throw Error("augment: dump interval must be >= 1");
  std::vector<Formula> dumps;
  Solver solver(f, config);
  const auto start = std::chrono::steady_clock::now();
  std::uint64_t spent = 0;
  while (!budget.conflicts || spent + dump_interval <= *budget.conflicts) {
    auto chunk = Budget::of_conflicts(dump_interval);
    if (budget.seconds) {
      const double used =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (used >= *budget.seconds) break;
      chunk.seconds = *budget.seconds - used;
    }
    const auto before = solver.stats().conflicts;
    const auto result = solver.solve(chunk);
    if (result.status != Status::kUnknown) break;
    if (solver.stats().conflicts - before < dump_interval) break;  // out of time
    spent += dump_interval;
    dumps.push_back(solver.snapshot_formula());
  }
  return dumps;
}

namespace {

std::string split_path_string(const std::vector<Literal>& assignment) {
  std::string out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(assignment[i].to_dimacs());
  }
  return out;
}

struct PendingExample {
  ManifestRow row;
  Formula formula;
  std::vector<std::uint64_t> counts;
};

std::vector<PendingExample> process_file(const fs::path& file, std::size_t file_index,
                                         const DatagenConfig& config) {
  const Formula f = read_dimacs_file(file.string());
  const std::uint64_t seed = Rng(config.seed).fork(file_index).next();
  const auto split = random_split(f, config.max_clauses, seed);

  std::vector<PendingExample> out;
  char prefix[32];
  for (std::size_t piece = 0; piece < split.subproblems.size(); ++piece) {
    const auto& sub = split.subproblems[piece];
    const std::string path = split_path_string(sub.assignment);
    auto emit = [&](const Formula& g, int dump) {
      auto ex = generate_datapoint(g, config.budget, config.solver);
      if (!ex) return;
      std::snprintf(prefix, sizeof prefix, "f%05zu_p%04zu_d%03d", file_index, piece, dump);
      out.push_back({ManifestRow{prefix, file.filename().string(), path, dump, seed}, g,
                     std::move(ex->glue_counts)});
    };
    emit(sub.formula, 0);
    if (config.augment) {
      const auto dumps = augment(sub.formula, config.dump_interval, config.budget, config.solver);
      for (std::size_t k = 0; k < dumps.size(); ++k) emit(dumps[k], static_cast<int>(k + 1));
    }
  }
  return out;
}

}  // namespace

void write_example(const fs::path& dir, const std::string& id, const Formula& f,
                   const std::vector<std::uint64_t>& counts) {
  if (counts.size() != static_cast<std::size_t>(f.num_vars)) {
    throw Error("write_example: counts do not match the variable count");
  }
  write_dimacs_file((dir / (id + ".cnf")).string(), f);
  std::ofstream out(dir / (id + ".counts"));
  if (!out) throw Error("cannot write " + (dir / (id + ".counts")).string());
  for (std::size_t i = 0; i < counts.size(); ++i) out << (i ? " " : "") << counts[i];
  out << '\n';
}

std::vector<ManifestRow> build_dataset(const fs::path& input_dir, const fs::path& output_dir,
                                       const DatagenConfig& config) {
  if (!fs::is_directory(input_dir)) throw Error("not a directory: " + input_dir.string());
  fs::create_directories(output_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<std::vector<ManifestRow>> rows(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        for (auto& ex : process_file(files[i], i, config)) {
          write_example(output_dir, ex.row.example_id, ex.formula, ex.counts);
          rows[i].push_back(std::move(ex.row));
        }
      } catch (const Error& e) {
        std::lock_guard lock(log_mutex);
        std::cerr << "datagen: skipping " << files[i].string() << ": " << e.what() << '\n';
        rows[i].clear();
      } catch (...) {
        std::lock_guard lock(log_mutex);
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

  std::vector<ManifestRow> manifest;
  for (auto& list : rows) {
    for (auto& r : list) manifest.push_back(std::move(r));
  }
  write_manifest(output_dir / "manifest.csv", manifest);
  return manifest;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "example_id,source_file,split_path,dump_index,seed\n";
  for (const auto& r : rows) {
    if (r.source_file.find(',') != std::string::npos) {
      throw Error("manifest: source file name contains a comma: " + r.source_file);
    }
    out << r.example_id << ',' << r.source_file << ',' << r.split_path << ',' << r.dump_index
        << ',' << r.seed << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "example_id,source_file,split_path,dump_index,seed") {
    throw Error(path.string() + ": bad manifest header");
  }
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 5) throw Error(path.string() + ": malformed manifest row: " + line);
    ManifestRow r;
    r.example_id = cells[0];
    r.source_file = cells[1];
    r.split_path = cells[2];
    try {
      r.dump_index = std::stoi(cells[3]);
      r.seed = std::stoull(cells[4]);
    } catch (const std::exception&) {
      throw Error(path.string() + ": malformed manifest row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SupervisedExample> load_dataset(const fs::path& dir) {
  std::vector<SupervisedExample> data;
  for (const auto& row : read_manifest(dir / "manifest.csv")) {
    const Formula f = read_dimacs_file((dir / (row.example_id + ".cnf")).string());
    std::ifstream in(dir / (row.example_id + ".counts"));
    if (!in) throw Error("missing counts for example " + row.example_id);
    std::vector<std::uint64_t> counts;
    std::uint64_t c;
    while (in >> c) counts.push_back(c);
    if (!in.eof()) throw Error("malformed counts for example " + row.example_id);
    SupervisedExample ex{clause_literal_graph(f), std::move(counts)};
    ex.validate();
    data.push_back(std::move(ex));
  }
  return data;
}

}  // namespace neuroglue
