#pragma once

// Multi-run sweeps over (n, k, architecture), result aggregation and the
// plot-data series behind the training-curve and final-error figures.
//
// Output layout under ExperimentConfig::out_dir:
//
//   results.csv
//   n<N>_k<K>/train.csv, test.csv (+ .meta.json)        shared by all archs
//   n<N>_k<K>/<arch>/trial_<i>.csv                       cycle log
//   n<N>_k<K>/<arch>/trial_<i>_snapshots.csv
//   n<N>_k<K>/<arch>/trial_<i>_network.json              final network
//   n<N>_k<K>/<arch>/trial_<i>_result.json               TrialResult
//
// With fresh_data_per_run the datasets become train_run<i>.csv/test_run<i>.csv
// and each run also gets its own landscape.
//
// Every seed is derived from the master seed and the identifiers of what it
// drives, so any trial can be replayed alone and results do not depend on the
// worker count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "nanet/error.hpp"
#include "nanet/evaluation.hpp"
#include "nanet/hillclimb.hpp"
#include "nanet/io.hpp"
#include "nanet/nk_landscape.hpp"
#include "nanet/rng.hpp"
#include "nanet/stats.hpp"

namespace nanet {

namespace fs = std::filesystem;

enum class SeedTag : std::uint64_t { Landscape = 1, TrainData = 2, TestData = 3, Search = 4 };

inline std::uint64_t arch_id(Arch a) { return static_cast<std::uint64_t>(a) + 1; }

struct ExperimentConfig {
  std::vector<std::size_t> ns{20, 200, 1000};
  std::vector<std::size_t> ks{2, 5, 10, 15};
  std::vector<Arch> archs{Arch::Nan, Arch::Ann, Arch::Nn};
  std::size_t runs = 20;
  TrainConfig train;  // seed is ignored; trial seeds are derived
  std::uint64_t master_seed = 0;
  fs::path out_dir = "results";
  std::size_t train_count = 1000;
  std::size_t test_count = 1000;
  std::size_t workers = 0;  // 0: hardware concurrency
  bool fresh_data_per_run = false;
  NeighborScheme neighbor_scheme = NeighborScheme::Random;
  bool write_cycle_logs = true;
  bool record_timing = false;
  bool save_landscapes = false;

  void validate() const {
    if (ns.empty() || ks.empty() || archs.empty()) throw ParameterError("experiment grid is empty");
    if (runs < 1) throw ParameterError("runs must be >= 1");
    if (train_count < 1 || test_count < 1) throw ParameterError("dataset sizes must be >= 1");
    for (std::size_t n : ns)
      for (std::size_t k : ks) check_nk_parameters(n, k);
    TrainConfig t = train;
    t.validate();
  }
};

struct TrialResult {
  std::size_t n = 0;
  std::size_t k = 0;
  Arch arch = Arch::Nan;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double final_train_mse = 0.0;
  double final_test_mse = 0.0;
  std::optional<double> final_ae_mse;
  double duration_ms = 0.0;

  bool operator==(const TrialResult&) const = default;
};

inline std::uint64_t data_seed(std::uint64_t master, SeedTag tag, std::size_t n, std::size_t k,
                               std::size_t data_index) {
  return derive_seed(master, {static_cast<std::uint64_t>(tag), n, k, data_index});
}

inline std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t k, Arch arch, std::size_t run) {
  return derive_seed(master, {static_cast<std::uint64_t>(SeedTag::Search), n, k, arch_id(arch), run});
}

inline fs::path cell_dir(const fs::path& root, std::size_t n, std::size_t k) {
  return root / ("n" + std::to_string(n) + "_k" + std::to_string(k));
}

struct TrialPaths {
  fs::path cycles, snapshots, network, result;
};

inline TrialPaths trial_paths(const fs::path& root, std::size_t n, std::size_t k, Arch arch, std::size_t run) {
  const fs::path dir = cell_dir(root, n, k) / to_string(arch);
  const std::string stem = "trial_" + std::to_string(run);
  return {dir / (stem + ".csv"), dir / (stem + "_snapshots.csv"), dir / (stem + "_network.json"),
          dir / (stem + "_result.json")};
}

inline std::string dataset_stem(bool fresh, std::size_t run, const std::string& which) {
  return fresh ? which + "_run" + std::to_string(run) + ".csv" : which + ".csv";
}

// ---- trial result serialization ------------------------------------------

inline nlohmann::json to_json(const TrialResult& r) {
  nlohmann::json j{{"n", r.n},
                   {"k", r.k},
                   {"arch", to_string(r.arch)},
                   {"run", r.run},
                   {"seed", r.seed},
                   {"final_train_mse", r.final_train_mse},
                   {"final_test_mse", r.final_test_mse},
                   {"duration_ms", r.duration_ms}};
  j["final_ae_mse"] = r.final_ae_mse ? nlohmann::json(*r.final_ae_mse) : nlohmann::json(nullptr);
  return j;
}

inline TrialResult trial_from_json(const nlohmann::json& j) {
  try {
    TrialResult r;
    r.n = j.at("n").get<std::size_t>();
    r.k = j.at("k").get<std::size_t>();
    r.arch = arch_from_string(j.at("arch").get<std::string>());
    r.run = j.at("run").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.final_train_mse = j.at("final_train_mse").get<double>();
    r.final_test_mse = j.at("final_test_mse").get<double>();
    if (!j.at("final_ae_mse").is_null()) r.final_ae_mse = j.at("final_ae_mse").get<double>();
    r.duration_ms = j.value("duration_ms", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed trial result: ") + e.what());
  }
}

inline constexpr const char* kResultsHeader =
    "n,k,arch,run,seed,final_train_mse,final_test_mse,final_ae_mse,duration_ms";

inline void write_results(const fs::path& path, const std::vector<TrialResult>& results, bool record_timing) {
  auto out = io::open_out(path);
  out << kResultsHeader << '\n';
  for (const auto& r : results) {
    out << r.n << ',' << r.k << ',' << to_string(r.arch) << ',' << r.run << ',' << r.seed << ','
        << io::format_double(r.final_train_mse) << ',' << io::format_double(r.final_test_mse) << ','
        << io::format_optional(r.final_ae_mse) << ','
        << (record_timing ? io::format_double(r.duration_ms) : std::string("0")) << '\n';
  }
  io::finish_write(out, path);
}

inline std::vector<TrialResult> read_results(const fs::path& path) {
  auto in = io::open_in(path);
  std::string line;
  std::getline(in, line);
  if (io::strip_cr(line) != kResultsHeader) throw IoError("unexpected results header in " + path.string());
  std::vector<TrialResult> out;
  while (std::getline(in, line)) {
    line = io::strip_cr(line);
    if (line.empty()) continue;
    const auto f = io::split_csv(line);
    if (f.size() != 9) throw IoError("malformed results row in " + path.string());
    TrialResult r;
    r.n = static_cast<std::size_t>(io::parse_double(f[0]));
    r.k = static_cast<std::size_t>(io::parse_double(f[1]));
    r.arch = arch_from_string(std::string(f[2]));
    r.run = static_cast<std::size_t>(io::parse_double(f[3]));
    r.seed = std::stoull(std::string(f[4]));
    r.final_train_mse = io::parse_double(f[5]);
    r.final_test_mse = io::parse_double(f[6]);
    if (!f[7].empty()) r.final_ae_mse = io::parse_double(f[7]);
    r.duration_ms = io::parse_double(f[8]);
    out.push_back(r);
  }
  return out;
}

// ---- running -------------------------------------------------------------

struct TrialOutput {
  TrialResult result;
  RunLog log;
};

inline TrialOutput run_trial(std::size_t n, std::size_t k, Arch arch, std::size_t run, std::uint64_t seed,
                             const Dataset& train_set, const Dataset& test_set, TrainConfig config) {
  config.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  auto [net, log] = train(arch, train_set, test_set, config);
  const auto stop = std::chrono::steady_clock::now();

  TrialResult r;
  r.n = n;
  r.k = k;
  r.arch = arch;
  r.run = run;
  r.seed = seed;
  r.final_train_mse = task_mse(net, train_set);
  r.final_test_mse = task_mse(net, test_set);
  r.final_ae_mse = autoencoder_mse(net, train_set);
  r.duration_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return {r, std::move(log)};
}

// Runs `count` independent tasks on up to `workers` threads.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct CellData {
  std::size_t n = 0, k = 0;
  std::vector<Dataset> train;  // one entry, or one per run when data is fresh per run
  std::vector<Dataset> test;
};

inline CellData prepare_cell(const ExperimentConfig& cfg, std::size_t n, std::size_t k) {
  CellData cell{n, k, {}, {}};
  const std::size_t copies = cfg.fresh_data_per_run ? cfg.runs : 1;
  const fs::path dir = cell_dir(cfg.out_dir, n, k);
  for (std::size_t c = 0; c < copies; ++c) {
    const std::size_t data_index = cfg.fresh_data_per_run ? c + 1 : 0;
    const auto land = nk_new(n, k, data_seed(cfg.master_seed, SeedTag::Landscape, n, k, data_index),
                             cfg.neighbor_scheme);
    cell.train.push_back(gen_dataset(land, cfg.train_count,
                                     data_seed(cfg.master_seed, SeedTag::TrainData, n, k, data_index)));
    cell.test.push_back(gen_dataset(land, cfg.test_count,
                                    data_seed(cfg.master_seed, SeedTag::TestData, n, k, data_index)));
    io::write_dataset(dir / dataset_stem(cfg.fresh_data_per_run, c, "train"), cell.train.back());
    io::write_dataset(dir / dataset_stem(cfg.fresh_data_per_run, c, "test"), cell.test.back());
    if (cfg.save_landscapes)
      io::write_landscape(dir / (cfg.fresh_data_per_run ? "landscape_run" + std::to_string(c) + ".json"
                                                        : std::string("landscape.json")),
                          land);
  }
  return cell;
}

inline std::optional<TrialResult> load_completed_trial(const ExperimentConfig& cfg, const TrialPaths& p,
                                                       std::uint64_t seed) {
  if (!fs::exists(p.result) || !fs::exists(p.snapshots) || !fs::exists(p.network)) return std::nullopt;
  if (cfg.write_cycle_logs && !fs::exists(p.cycles)) return std::nullopt;
  try {
    auto r = trial_from_json(io::read_json(p.result));
    if (r.seed != seed) return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

using ProgressFn = std::function<void(const TrialResult&, bool resumed)>;

// Results are ordered by (n, k, arch, run) following the config grid order.
inline std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec || !fs::is_directory(cfg.out_dir))
    throw IoError("cannot create output directory " + cfg.out_dir.string());

  std::vector<CellData> cells;
  for (std::size_t n : cfg.ns)
    for (std::size_t k : cfg.ks) cells.push_back(prepare_cell(cfg, n, k));

  struct Task {
    std::size_t cell, arch_index, run;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t a = 0; a < cfg.archs.size(); ++a)
      for (std::size_t r = 0; r < cfg.runs; ++r) tasks.push_back({c, a, r});

  std::vector<TrialResult> results(tasks.size());
  std::mutex progress_mutex;
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& cell = cells[task.cell];
    const Arch arch = cfg.archs[task.arch_index];
    const std::uint64_t seed = trial_seed(cfg.master_seed, cell.n, cell.k, arch, task.run);
    const auto paths = trial_paths(cfg.out_dir, cell.n, cell.k, arch, task.run);

    bool resumed = false;
    if (auto done = load_completed_trial(cfg, paths, seed)) {
      results[t] = *done;
      resumed = true;
    } else {
      const std::size_t d = cfg.fresh_data_per_run ? task.run : 0;
      TrainConfig tc = cfg.train;
      tc.record_cycles = cfg.write_cycle_logs;
      auto out = run_trial(cell.n, cell.k, arch, task.run, seed, cell.train[d], cell.test[d], tc);
      if (cfg.write_cycle_logs) io::write_cycles(paths.cycles, out.log.cycles);
      io::write_snapshots(paths.snapshots, out.log.snapshots);
      io::write_network(paths.network, out.log.final_network);
      if (!cfg.record_timing) out.result.duration_ms = 0.0;
      io::write_json(paths.result, to_json(out.result));
      results[t] = out.result;
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(results[t], resumed);
    }
  });

  write_results(cfg.out_dir / "results.csv", results, cfg.record_timing);
  return results;
}

// ---- aggregation ---------------------------------------------------------

struct ArchSummary {
  Arch arch = Arch::Nan;
  std::vector<double> final_test;
  SummaryStats stats;
  std::optional<TestReport> shapiro;
  std::string shapiro_note;  // reason when shapiro is absent
};

struct PairwiseTest {
  Arch a = Arch::Nan;
  Arch b = Arch::Ann;
  std::optional<TestReport> t_test;
  std::string note;  // reason when t_test is absent
};

struct CellAggregate {
  std::size_t n = 0, k = 0;
  std::vector<ArchSummary> archs;
  std::vector<PairwiseTest> pairs;
};

inline CellAggregate aggregate(const std::vector<TrialResult>& results, std::size_t n, std::size_t k,
                               bool pooled_variance = false) {
  CellAggregate agg{n, k, {}, {}};
  for (Arch arch : {Arch::Nan, Arch::Ann, Arch::Nn}) {
    ArchSummary s;
    s.arch = arch;
    for (const auto& r : results)
      if (r.n == n && r.k == k && r.arch == arch) s.final_test.push_back(r.final_test_mse);
    if (s.final_test.empty()) continue;
    if (s.final_test.size() < 2)
      throw ParameterError("cell n=" + std::to_string(n) + " k=" + std::to_string(k) + " has fewer than 2 " +
                           to_string(arch) + " trials");
    s.stats = summarize(s.final_test);
    try {
      s.shapiro = shapiro_wilk(s.final_test);
    } catch (const TestInapplicableError& e) {
      s.shapiro_note = e.what();
    }
    agg.archs.push_back(std::move(s));
  }
  if (agg.archs.empty())
    throw ParameterError("no results for cell n=" + std::to_string(n) + " k=" + std::to_string(k));
  for (std::size_t i = 0; i < agg.archs.size(); ++i)
    for (std::size_t j = i + 1; j < agg.archs.size(); ++j) {
      PairwiseTest p;
      p.a = agg.archs[i].arch;
      p.b = agg.archs[j].arch;
      try {
        p.t_test = pooled_variance ? student_t_test(agg.archs[i].final_test, agg.archs[j].final_test)
                                   : welch_t_test(agg.archs[i].final_test, agg.archs[j].final_test);
      } catch (const TestInapplicableError& e) {
        p.note = std::string("t-test skipped: ") + e.what();
      }
      agg.pairs.push_back(std::move(p));
    }
  return agg;
}

// ---- plot data -----------------------------------------------------------

// Pointwise mean over runs. All runs must share the same snapshot iterations;
// an optional field is averaged only when every run has it.
inline std::vector<Snapshot> average_snapshots(const std::vector<std::vector<Snapshot>>& runs) {
  if (runs.empty()) throw ParameterError("no runs to average");
  const std::size_t len = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != len) throw ParameterError("runs have different snapshot counts");
  const double count = static_cast<double>(runs.size());
  std::vector<Snapshot> out(len);
  for (std::size_t p = 0; p < len; ++p) {
    Snapshot& s = out[p];
    s.iter = runs.front()[p].iter;
    double task = 0.0, ae = 0.0, test = 0.0;
    bool have_ae = true, have_test = true;
    for (const auto& r : runs) {
      if (r[p].iter != s.iter) throw ParameterError("runs have different snapshot iterations");
      task += r[p].train_task_mse;
      if (r[p].train_ae_mse) ae += *r[p].train_ae_mse; else have_ae = false;
      if (r[p].test_task_mse) test += *r[p].test_task_mse; else have_test = false;
    }
    s.train_task_mse = task / count;
    if (have_ae) s.train_ae_mse = ae / count;
    if (have_test) s.test_task_mse = test / count;
  }
  return out;
}

enum class Figure { TrainingCurves = 5, FinalErrors = 6, TestCurves = 7 };

inline Figure figure_from_int(int f) {
  if (f == 5 || f == 6 || f == 7) return static_cast<Figure>(f);
  throw ParameterError("figure must be 5, 6 or 7");
}

struct CurveSeries {
  Arch arch;
  std::vector<Snapshot> mean;
};

inline std::vector<CurveSeries> cell_curves(const fs::path& dir, const std::vector<TrialResult>& results,
                                            std::size_t n, std::size_t k, const std::vector<Arch>& archs) {
  std::vector<CurveSeries> out;
  for (Arch arch : archs) {
    std::vector<std::vector<Snapshot>> runs;
    for (const auto& r : results) {
      if (r.n != n || r.k != k || r.arch != arch) continue;
      const auto p = trial_paths(dir, n, k, arch, r.run).snapshots;
      if (!fs::exists(p)) throw IoError("missing snapshot log " + p.string());
      runs.push_back(io::read_snapshots(p));
    }
    if (runs.empty())
      throw IoError("no " + to_string(arch) + " runs for cell n=" + std::to_string(n) + " k=" + std::to_string(k));
    out.push_back({arch, average_snapshots(runs)});
  }
  return out;
}

inline std::string training_curves_csv(const std::vector<CurveSeries>& curves) {
  std::string s = "arch,iter,train_task_mse,train_ae_mse\n";
  for (const auto& c : curves)
    for (const auto& p : c.mean)
      s += to_string(c.arch) + "," + std::to_string(p.iter) + "," + io::format_double(p.train_task_mse) + "," +
           io::format_optional(p.train_ae_mse) + "\n";
  return s;
}

inline std::string test_curves_csv(const std::vector<CurveSeries>& curves) {
  std::string s = "arch,iter,test_task_mse\n";
  for (const auto& c : curves)
    for (const auto& p : c.mean)
      s += to_string(c.arch) + "," + std::to_string(p.iter) + "," + io::format_optional(p.test_task_mse) + "\n";
  return s;
}

inline std::string final_errors_csv(const std::vector<TrialResult>& results) {
  std::map<std::tuple<std::size_t, std::size_t, int>, std::vector<double>> groups;
  for (const auto& r : results) groups[{r.n, r.k, static_cast<int>(r.arch)}].push_back(r.final_test_mse);
  std::string s = "n,k,arch,runs,mean,min,max,sd\n";
  for (const auto& [key, vals] : groups) {
    const auto st = summarize(vals);
    s += std::to_string(std::get<0>(key)) + "," + std::to_string(std::get<1>(key)) + "," +
         to_string(static_cast<Arch>(std::get<2>(key))) + "," + std::to_string(st.count) + "," +
         io::format_double(st.mean) + "," + io::format_double(st.min) + "," + io::format_double(st.max) + "," +
         io::format_double(st.sd) + "\n";
  }
  return s;
}

// Reads a sweep directory and returns the requested figure's CSV text. n, k
// and archs select the cell for the curve figures; empty archs means every
// architecture present in the cell.
inline std::string emit_series(const fs::path& dir, Figure figure, std::size_t n = 0, std::size_t k = 0,
                               std::vector<Arch> archs = {}) {
  const auto results_path = dir / "results.csv";
  if (!fs::exists(results_path)) throw IoError("missing " + results_path.string());
  const auto results = read_results(results_path);
  if (figure == Figure::FinalErrors) return final_errors_csv(results);
  if (archs.empty())
    for (Arch a : {Arch::Nan, Arch::Ann, Arch::Nn})
      for (const auto& r : results)
        if (r.n == n && r.k == k && r.arch == a) {
          archs.push_back(a);
          break;
        }
  if (archs.empty())
    throw IoError("no results for cell n=" + std::to_string(n) + " k=" + std::to_string(k));
  const auto curves = cell_curves(dir, results, n, k, archs);
  return figure == Figure::TrainingCurves ? training_curves_csv(curves) : test_curves_csv(curves);
}

}  // namespace nanet
