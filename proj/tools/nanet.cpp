// nanet: NK-landscape datasets, hill-climbed autoencoding networks, sweeps,
// statistics and plot data from one command line.
//
// Exit codes: 0 success, 1 user error, 2 I/O error, 3 internal invariant violation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nanet/error.hpp"
#include "nanet/evaluation.hpp"
#include "nanet/experiments.hpp"
#include "nanet/hillclimb.hpp"
#include "nanet/io.hpp"
#include "nanet/nk_landscape.hpp"
#include "nanet/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nanet;

namespace {

enum ExitCode { kOk = 0, kUserError = 1, kIoError = 2, kInternalError = 3 };

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, const char* what = "master seed") {
  std::uint64_t s;
  if (seed) {
    s = *seed;
  } else {
    std::random_device rd;
    s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::cerr << what << ": " << s << '\n';
  return s;
}

void check_format(const std::string& f) {
  if (f != "json" && f != "csv") throw ParameterError("--format must be json or csv");
}

struct TrainFlags {
  std::size_t iterations = 10000;
  double r = 1.0;
  std::size_t h = 10;
  double p_autoencode = 0.5;
  std::string decoder_activation = "sigmoid";
  bool decoder_bias = false;
  std::size_t eval_interval = 100;
  bool no_incremental = false;

  void add_to(CLI::App* app) {
    app->add_option("--iterations", iterations, "hill-climbing cycles per run")->capture_default_str();
    app->add_option("--r", r, "mutation half-range R; deltas are uniform on [-R, R]")->capture_default_str();
    app->add_option("--h", h, "hidden-layer nodes H")->capture_default_str();
    app->add_option("--p-autoencode", p_autoencode, "probability that a cycle is an autoencoding cycle")
        ->capture_default_str();
    app->add_option("--decoder-activation", decoder_activation, "decoder node transfer: sigmoid|tanh|linear")
        ->capture_default_str();
    app->add_flag("--decoder-bias", decoder_bias, "give decoder nodes a bias (default: weights only)");
    app->add_option("--eval-interval", eval_interval, "snapshot period in cycles")->capture_default_str();
    app->add_flag("--no-incremental", no_incremental, "evaluate every proposal from scratch");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.iterations = iterations;
    c.r = r;
    c.h = h;
    c.p_autoencode = p_autoencode;
    c.decoder_activation = decoder_activation_from_string(decoder_activation);
    c.decoder_bias = decoder_bias;
    c.eval_interval = eval_interval;
    c.incremental = !no_incremental;
    c.seed = seed;
    c.validate();
    return c;
  }
};

json summary_json(const SummaryStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}};
}

json report_json(const TestReport& r, bool with_df) {
  json j{{"statistic", r.statistic}, {"p_value", r.p_value}, {"significant", r.significant}};
  if (with_df) j["df"] = r.df;
  return j;
}

// Flattens a JSON object into "key,value" CSV rows.
void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_string()) {
    out << prefix << ",\"" << j.get<std::string>() << "\"\n";
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

void print(const json& j, const std::string& format) {
  if (format == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "field,value\n";
    flatten(j, "", std::cout);
  }
}

json trial_json(const TrialResult& r) { return to_json(r); }

// A single numeric column: either the named column of a headed CSV or the
// first field of a header-less file.
std::vector<double> read_sample(const fs::path& path, const std::string& column, const std::string& arch) {
  auto in = io::open_in(path);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    line = io::strip_cr(line);
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ParameterError(path.string() + " holds no samples");
  std::vector<double> out;
  const auto first = io::split_csv(rows.front());
  bool headed = false;
  try {
    io::parse_double(first.front());
  } catch (const ParameterError&) {
    headed = true;
  }
  if (!headed) {
    for (const auto& r : rows) out.push_back(io::parse_double(io::split_csv(r).front()));
    return out;
  }
  std::size_t col = first.size(), arch_col = first.size();
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] == column) col = i;
    if (first[i] == "arch") arch_col = i;
  }
  if (col == first.size()) throw ParameterError("column '" + column + "' not found in " + path.string());
  if (!arch.empty() && arch_col == first.size()) throw ParameterError("--arch given but " + path.string() + " has no arch column");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = io::split_csv(rows[i]);
    if (f.size() != first.size()) throw ParameterError("ragged row in " + path.string());
    if (!arch.empty() && f[arch_col] != arch) continue;
    out.push_back(io::parse_double(f[col]));
  }
  return out;
}

json compare_json(const std::vector<double>& a, const std::vector<double>& b, bool pooled) {
  json j;
  j["summary_a"] = summary_json(summarize(a));
  j["summary_b"] = summary_json(summarize(b));
  auto sw = [](const std::vector<double>& x) -> json {
    try {
      return report_json(shapiro_wilk(x), false);
    } catch (const TestInapplicableError& e) {
      return {{"error", e.what()}};
    }
  };
  j["shapiro_a"] = sw(a);
  j["shapiro_b"] = sw(b);
  try {
    auto t = report_json(pooled ? student_t_test(a, b) : welch_t_test(a, b), true);
    t["method"] = pooled ? "student" : "welch";
    j["t_test"] = t;
  } catch (const TestInapplicableError& e) {
    j["t_test"] = {{"error", e.what()}};
  }
  return j;
}

json aggregate_json(const CellAggregate& agg) {
  json j{{"n", agg.n}, {"k", agg.k}};
  for (const auto& s : agg.archs) {
    json a{{"summary", summary_json(s.stats)}};
    a["shapiro"] = s.shapiro ? report_json(*s.shapiro, false) : json{{"error", s.shapiro_note}};
    j["archs"][to_string(s.arch)] = a;
  }
  j["pairs"] = json::array();
  for (const auto& p : agg.pairs) {
    json t{{"a", to_string(p.a)}, {"b", to_string(p.b)}};
    if (p.t_test)
      t["t_test"] = report_json(*p.t_test, true);
    else
      t["t_test"] = {{"error", p.note}};
    j["pairs"].push_back(t);
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neuron-level autoencoding experiments on NK-landscape regression tasks"};
  app.require_subcommand(1);
  // "--h" names the hidden-layer size, so help is long-form only.
  app.set_help_flag("--help", "print this help message and exit");

  // gen-landscape
  auto* gl = app.add_subcommand("gen-landscape", "generate an NK landscape and write it as JSON");
  std::size_t gl_n = 0, gl_k = 0;
  std::optional<std::uint64_t> gl_seed;
  std::string gl_out, gl_scheme = "random";
  gl->add_option("--n", gl_n, "gene count N (>= 2)")->required();
  gl->add_option("--k", gl_k, "epistasis K (1 <= K <= min(15, N-1))")->required();
  gl->add_option("--seed", gl_seed, "landscape seed (drawn and printed when omitted)");
  gl->add_option("--neighbors", gl_scheme, "partner selection: random|adjacent")->capture_default_str();
  gl->add_option("--out", gl_out, "output JSON path")->required();

  // gen-dataset
  auto* gd = app.add_subcommand("gen-dataset", "sample a labelled dataset from a landscape file");
  std::string gd_land, gd_out;
  std::size_t gd_count = 1000;
  std::optional<std::uint64_t> gd_seed;
  gd->add_option("--landscape", gd_land, "landscape JSON")->required();
  gd->add_option("--count", gd_count, "number of examples")->capture_default_str();
  gd->add_option("--seed", gd_seed, "dataset seed (drawn and printed when omitted)");
  gd->add_option("--out", gd_out, "output CSV path; metadata goes to <stem>.meta.json")->required();

  // train
  auto* tr = app.add_subcommand("train", "train one network and write its logs");
  std::string tr_arch = "nan", tr_out, tr_land, tr_train, tr_test, tr_format = "json", tr_scheme = "random";
  std::size_t tr_n = 20, tr_k = 5, tr_train_count = 1000, tr_test_count = 1000;
  std::optional<std::uint64_t> tr_seed;
  TrainFlags tr_flags;
  tr->add_option("--arch", tr_arch, "nan|ann|nn")->capture_default_str();
  tr->add_option("--n", tr_n, "gene count N when generating data")->capture_default_str();
  tr->add_option("--k", tr_k, "epistasis K when generating data")->capture_default_str();
  tr->add_option("--seed", tr_seed, "master seed (drawn and printed when omitted)");
  tr->add_option("--landscape", tr_land, "use this landscape JSON instead of generating one");
  tr->add_option("--train", tr_train, "training set CSV (with --test)");
  tr->add_option("--test", tr_test, "test set CSV (with --train)");
  tr->add_option("--train-count", tr_train_count, "generated training examples")->capture_default_str();
  tr->add_option("--test-count", tr_test_count, "generated test examples")->capture_default_str();
  tr->add_option("--neighbors", tr_scheme, "partner selection for generated landscapes")->capture_default_str();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--format", tr_format, "json|csv")->capture_default_str();
  tr_flags.add_to(tr);

  // sweep
  auto* sw = app.add_subcommand("sweep", "run the (N, K, architecture) grid with repeated runs");
  ExperimentConfig sw_cfg;
  std::vector<std::string> sw_archs{"nan", "ann", "nn"};
  std::optional<std::uint64_t> sw_seed;
  std::string sw_out = "results", sw_scheme = "random";
  bool sw_no_cycles = false;
  TrainFlags sw_flags;
  sw->add_option("--n", sw_cfg.ns, "N grid")->capture_default_str();
  sw->add_option("--k", sw_cfg.ks, "K grid")->capture_default_str();
  sw->add_option("--arch", sw_archs, "architectures")->capture_default_str();
  sw->add_option("--runs", sw_cfg.runs, "independent runs per cell and architecture")->capture_default_str();
  sw->add_option("--workers", sw_cfg.workers, "worker threads (0: hardware concurrency)")->capture_default_str();
  sw->add_option("--seed", sw_seed, "master seed (drawn and printed when omitted)");
  sw->add_option("--train-count", sw_cfg.train_count, "training examples per dataset")->capture_default_str();
  sw->add_option("--test-count", sw_cfg.test_count, "test examples per dataset")->capture_default_str();
  sw->add_option("--neighbors", sw_scheme, "partner selection: random|adjacent")->capture_default_str();
  sw->add_flag("--fresh-data-per-run", sw_cfg.fresh_data_per_run, "new landscape and datasets for every run");
  sw->add_flag("--no-cycle-logs", sw_no_cycles, "skip per-cycle logs (snapshots are still written)");
  sw->add_flag("--record-timing", sw_cfg.record_timing, "write wall-clock durations (makes results.csv non-reproducible)");
  sw->add_flag("--save-landscapes", sw_cfg.save_landscapes, "also write each cell's landscape JSON");
  sw->add_option("--out", sw_out, "output directory")->capture_default_str();
  sw_flags.add_to(sw);

  // stats
  auto* st = app.add_subcommand("stats", "statistics on result files");
  st->require_subcommand(1);
  auto* cmp = st->add_subcommand("compare", "summaries, Shapiro-Wilk and a two-sample t-test for two samples");
  std::string cmp_a, cmp_b, cmp_column = "final_test_mse", cmp_arch_a, cmp_arch_b, st_format = "json";
  bool st_student = false;
  cmp->add_option("--a", cmp_a, "first sample file")->required();
  cmp->add_option("--b", cmp_b, "second sample file")->required();
  cmp->add_option("--column", cmp_column, "column to read from headed CSVs")->capture_default_str();
  cmp->add_option("--arch-a", cmp_arch_a, "keep only rows of this arch from --a");
  cmp->add_option("--arch-b", cmp_arch_b, "keep only rows of this arch from --b");
  cmp->add_flag("--student", st_student, "pooled-variance t-test instead of Welch");
  cmp->add_option("--format", st_format, "json|csv")->capture_default_str();
  auto* agg = st->add_subcommand("aggregate", "per-architecture summaries and pairwise tests for one cell");
  std::string agg_results;
  std::size_t agg_n = 0, agg_k = 0;
  agg->add_option("--results", agg_results, "results.csv from a sweep")->required();
  agg->add_option("--n", agg_n, "cell N")->required();
  agg->add_option("--k", agg_k, "cell K")->required();
  agg->add_flag("--student", st_student, "pooled-variance t-test instead of Welch");
  agg->add_option("--format", st_format, "json|csv")->capture_default_str();

  // plotdata
  auto* pd = app.add_subcommand("plotdata", "emit figure data series from a sweep directory");
  std::string pd_dir, pd_out;
  int pd_figure = 5;
  std::size_t pd_n = 20, pd_k = 5;
  std::vector<std::string> pd_archs;
  pd->add_option("--dir", pd_dir, "sweep output directory")->required();
  pd->add_option("--figure", pd_figure,
                 "5: training task/AE curves, 6: final test error table, 7: test curves")
      ->capture_default_str();
  pd->add_option("--n", pd_n, "cell N for curve figures")->capture_default_str();
  pd->add_option("--k", pd_k, "cell K for curve figures")->capture_default_str();
  pd->add_option("--arch", pd_archs, "architectures (default: all present in the cell)");
  pd->add_option("--out", pd_out, "output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUserError;
  }

  try {
    if (*gl) {
      const auto seed = resolve_seed(gl_seed, "landscape seed");
      io::write_landscape(gl_out, nk_new(gl_n, gl_k, seed, neighbor_scheme_from_string(gl_scheme)));
    } else if (*gd) {
      const auto land = io::read_landscape(gd_land);
      const auto seed = resolve_seed(gd_seed, "dataset seed");
      io::write_dataset(gd_out, gen_dataset(land, gd_count, seed));
    } else if (*tr) {
      check_format(tr_format);
      const auto seed = resolve_seed(tr_seed);
      const Arch arch = arch_from_string(tr_arch);
      const fs::path out = tr_out;
      Dataset train_set, test_set;
      if (!tr_train.empty() || !tr_test.empty()) {
        if (tr_train.empty() || tr_test.empty()) throw ParameterError("--train and --test must be given together");
        train_set = io::read_dataset(tr_train);
        test_set = io::read_dataset(tr_test);
      } else {
        const auto land = tr_land.empty()
                              ? nk_new(tr_n, tr_k, derive_seed(seed, {static_cast<std::uint64_t>(SeedTag::Landscape)}),
                                       neighbor_scheme_from_string(tr_scheme))
                              : io::read_landscape(tr_land);
        train_set = gen_dataset(land, tr_train_count, derive_seed(seed, {static_cast<std::uint64_t>(SeedTag::TrainData)}));
        test_set = gen_dataset(land, tr_test_count, derive_seed(seed, {static_cast<std::uint64_t>(SeedTag::TestData)}));
        io::write_dataset(out / "train.csv", train_set);
        io::write_dataset(out / "test.csv", test_set);
      }
      const std::uint64_t search_seed = derive_seed(seed, {static_cast<std::uint64_t>(SeedTag::Search)});
      const auto cfg = tr_flags.config(search_seed);
      auto trial = run_trial(train_set.meta.n, train_set.meta.k, arch, 0, search_seed, train_set, test_set, cfg);
      trial.result.duration_ms = 0.0;
      io::write_cycles(out / "cycles.csv", trial.log.cycles);
      io::write_snapshots(out / "snapshots.csv", trial.log.snapshots);
      io::write_network(out / "network.json", trial.log.final_network);
      io::write_json(out / "result.json", trial_json(trial.result));
      print(trial_json(trial.result), tr_format);
    } else if (*sw) {
      sw_cfg.master_seed = resolve_seed(sw_seed);
      sw_cfg.archs.clear();
      for (const auto& a : sw_archs) sw_cfg.archs.push_back(arch_from_string(a));
      sw_cfg.out_dir = sw_out;
      sw_cfg.neighbor_scheme = neighbor_scheme_from_string(sw_scheme);
      sw_cfg.write_cycle_logs = !sw_no_cycles;
      sw_cfg.train = sw_flags.config(0);
      const auto results = run_experiment(sw_cfg, [](const TrialResult& r, bool resumed) {
        std::cerr << (resumed ? "resumed " : "done    ") << "n=" << r.n << " k=" << r.k << " " << to_string(r.arch)
                  << " run=" << r.run << " test_mse=" << r.final_test_mse << '\n';
      });
      std::cerr << results.size() << " trials -> " << (sw_cfg.out_dir / "results.csv").string() << '\n';
    } else if (*cmp) {
      check_format(st_format);
      const auto a = read_sample(cmp_a, cmp_column, cmp_arch_a);
      const auto b = read_sample(cmp_b, cmp_column, cmp_arch_b);
      print(compare_json(a, b, st_student), st_format);
    } else if (*agg) {
      check_format(st_format);
      print(aggregate_json(aggregate(read_results(agg_results), agg_n, agg_k, st_student)), st_format);
    } else if (*pd) {
      std::vector<Arch> archs;
      for (const auto& a : pd_archs) archs.push_back(arch_from_string(a));
      const auto text = emit_series(pd_dir, figure_from_int(pd_figure), pd_n, pd_k, archs);
      if (pd_out.empty()) {
        std::cout << text;
      } else {
        auto out = io::open_out(pd_out);
        out << text;
        io::finish_write(out, pd_out);
      }
    }
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const TestInapplicableError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kOk;
}
