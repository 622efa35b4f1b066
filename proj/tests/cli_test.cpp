#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / ("nanet_cli_" + std::to_string(::getpid()));

struct Outcome {
  int code;
  std::string out;
};

Outcome run(const std::string& args) {
  fs::create_directories(kTmp);
  const fs::path capture = kTmp / "stdout.txt";
  const std::string cmd = std::string("\"") + NANET_CLI_PATH + "\" " + args + " > \"" + capture.string() +
                          "\" 2> \"" + (kTmp / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dir(const std::string& name) {
  const auto p = kTmp / name;
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST(Cli, TrainIsReproducible) {
  const std::string a = dir("ta"), b = dir("tb");
  const std::string common = " train --arch nan --n 10 --k 2 --seed 42 --iterations 300 --h 4 --eval-interval 50"
                             " --train-count 50 --test-count 40 --out ";
  const auto ra = run(common + a);
  const auto rb = run(common + b);
  ASSERT_EQ(ra.code, 0);
  ASSERT_EQ(rb.code, 0);
  EXPECT_EQ(ra.out, rb.out);
  for (const char* f : {"cycles.csv", "snapshots.csv", "network.json", "result.json", "train.csv", "test.csv"}) {
    ASSERT_TRUE(fs::exists(fs::path(a) / f)) << f;
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(b) / f)) << f;
  }
  const auto j = nlohmann::json::parse(ra.out);
  EXPECT_EQ(j["arch"], "nan");
  EXPECT_TRUE(j.contains("final_test_mse"));
}

TEST(Cli, CompareIdenticalSamples) {
  const auto d = fs::path(dir("cmp"));
  fs::create_directories(d);
  std::ofstream(d / "a.txt") << "0.1\n0.2\n0.15\n0.12\n0.3\n";
  const auto r = run("stats compare --a " + (d / "a.txt").string() + " --b " + (d / "a.txt").string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["t_test"]["statistic"].get<double>(), 0.0);
  EXPECT_EQ(j["t_test"]["p_value"].get<double>(), 1.0);
  EXPECT_EQ(j["t_test"]["method"], "welch");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("train --out x --bogus-flag").code, 1);
  EXPECT_EQ(run("gen-landscape --n 5 --k 5 --seed 1 --out " + dir("l") + "/l.json").code, 1);
  EXPECT_EQ(run("gen-dataset --landscape /nonexistent/land.json --seed 1 --out " + dir("d") + "/d.csv").code, 2);
  EXPECT_EQ(run("stats compare --a /nonexistent/a --b /nonexistent/b").code, 2);
  EXPECT_EQ(run("train --out " + dir("bad") + " --iterations 10 --r -1 --seed 1").code, 1);
}

TEST(Cli, HelpListsDefaults) {
  const auto r = run("train --help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"[10000]", "[1]", "[0.5]", "[100]", "--decoder-bias"}) EXPECT_NE(r.out.find(s), std::string::npos) << s;
}

TEST(Cli, GenerateAndTrainOnFiles) {
  const auto d = fs::path(dir("gen"));
  ASSERT_EQ(run("gen-landscape --n 8 --k 3 --seed 7 --out " + (d / "land.json").string()).code, 0);
  ASSERT_EQ(run("gen-dataset --landscape " + (d / "land.json").string() + " --count 30 --seed 1 --out " +
                (d / "train.csv").string()).code, 0);
  ASSERT_EQ(run("gen-dataset --landscape " + (d / "land.json").string() + " --count 30 --seed 2 --out " +
                (d / "test.csv").string()).code, 0);
  EXPECT_TRUE(fs::exists(d / "train.meta.json"));
  const auto r = run("train --arch ann --train " + (d / "train.csv").string() + " --test " + (d / "test.csv").string() +
                     " --iterations 100 --h 3 --eval-interval 50 --seed 3 --format csv --out " + (d / "run").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 12), "field,value\n");
  EXPECT_FALSE(fs::exists(d / "run" / "train.csv"));
}

TEST(Cli, SweepThenPlotdataAndAggregate) {
  const auto d = dir("sweep");
  ASSERT_EQ(run("sweep --n 6 --k 2 --arch nan nn --runs 3 --iterations 100 --h 3 --eval-interval 25"
                " --train-count 20 --test-count 20 --workers 1 --seed 5 --out " + d).code, 0);
  const auto fig5 = run("plotdata --dir " + d + " --figure 5 --n 6 --k 2");
  ASSERT_EQ(fig5.code, 0);
  EXPECT_EQ(fig5.out.substr(0, fig5.out.find('\n')), "arch,iter,train_task_mse,train_ae_mse");
  const auto fig6 = run("plotdata --dir " + d + " --figure 6");
  ASSERT_EQ(fig6.code, 0);
  EXPECT_NE(fig6.out.find("6,2,nn,3,"), std::string::npos);
  EXPECT_EQ(run("plotdata --dir " + d + " --figure 4").code, 1);

  const auto agg = run("stats aggregate --results " + d + "/results.csv --n 6 --k 2");
  ASSERT_EQ(agg.code, 0);
  const auto j = nlohmann::json::parse(agg.out);
  EXPECT_TRUE(j["archs"].contains("nan"));
  EXPECT_EQ(j["pairs"].size(), 1u);
  const auto agg_csv = run("stats aggregate --format csv --results " + d + "/results.csv --n 6 --k 2");
  EXPECT_NE(agg_csv.out.find("\npairs.0.t_test.p_value,"), std::string::npos);

  const auto cmp = run("stats compare --a " + d + "/results.csv --b " + d +
                       "/results.csv --column final_test_mse --arch-a nan --arch-b nn");
  EXPECT_EQ(cmp.code, 0);
  EXPECT_EQ(nlohmann::json::parse(cmp.out)["summary_a"]["count"], 3);
}
