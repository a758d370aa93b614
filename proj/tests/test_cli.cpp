#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <algorithm>

#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"
#include "mmorder/cli.hpp"
#include "mmorder/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mmorder");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = mmorder::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("mmorder_cli_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& contents) const {
    const fs::path p = path_ / name;
    std::ofstream(p, std::ios::binary) << contents;
    return p.string();
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(ParseCsv, AcceptsHeaderBlankLinesAndCrlf) {
  using mmorder::cli::parse_values_csv;
  EXPECT_EQ(parse_values_csv("x\n1\n2.5\n"), (std::vector<double>{1, 2.5}));
  EXPECT_EQ(parse_values_csv("1\r\n\r\n  3 \r\n"), (std::vector<double>{1, 3}));
  EXPECT_EQ(parse_values_csv("1e-3\n+2\n-4"), (std::vector<double>{1e-3, 2, -4}));
}

TEST(ParseCsv, RejectsMalformedWithLineNumber) {
  using mmorder::cli::parse_values_csv;
  try {
    parse_values_csv("x\n1\nabc\n");
    FAIL();
  } catch (const mmorder::InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_values_csv(""), mmorder::InvalidInput);
  EXPECT_THROW(parse_values_csv("x\n"), mmorder::InvalidInput);
  EXPECT_THROW(parse_values_csv("1,2\n"), mmorder::InvalidInput);
  EXPECT_THROW(parse_values_csv("inf\n"), mmorder::InvalidInput);
  EXPECT_THROW(parse_values_csv("1\nx\n"), mmorder::InvalidInput);
}

TEST(CliEstimate, Examples) {
  TempDir dir;
  const CliRun a = run_cli({"estimate", "--family", "gamma_scale", "--param", "alpha=2", "--input",
                         dir.file("a.csv", "1\n2\n3\n")});
  ASSERT_EQ(a.code, 0) << a.err;
  const json ja = json::parse(a.out);
  EXPECT_NEAR(ja["theta_hat"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(ja["n"], 3);
  EXPECT_EQ(ja["family"], "gamma_scale");
  EXPECT_EQ(ja["spec"], "mean");
  EXPECT_TRUE(ja.contains("spec_version"));
  EXPECT_EQ(ja["request"]["params"]["alpha"], 2.0);

  const CliRun b = run_cli({"estimate", "--family", "uniform_scale", "--spec", "mean", "--input",
                         dir.file("b.csv", "x\n1\n3\n")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NEAR(json::parse(b.out)["theta_hat"].get<double>(), 4.0, 1e-12);
}

TEST(CliEstimate, ExitCodes) {
  TempDir dir;
  const CliRun empty = run_cli({"estimate", "--family", "uniform_scale", "--input", dir.file("e.csv", "")});
  EXPECT_EQ(empty.code, 3);
  EXPECT_EQ(json::parse(empty.err)["error"]["kind"], "input");

  const CliRun bad = run_cli({"estimate", "--family", "uniform_scale", "--input", dir.file("m.csv", "1\n2\nzz\n")});
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos);

  const CliRun infeasible = run_cli({"estimate", "--family", "uniform_sym", "--spec", "k-th:2", "--input",
                                  dir.file("z.csv", "0\n0\n")});
  EXPECT_EQ(infeasible.code, 2);
  const json err = json::parse(infeasible.err)["error"];
  EXPECT_EQ(err["kind"], "infeasible");
  EXPECT_TRUE(err.contains("lower"));

  EXPECT_EQ(run_cli({"estimate", "--family", "nope", "--input", dir.file("n.csv", "1\n")}).code, 2);
  EXPECT_EQ(run_cli({"estimate", "--family", "uniform_scale", "--input", dir.path("missing.csv")}).code, 3);
  EXPECT_EQ(run_cli({"estimate", "--family", "uniform_scale", "--input", dir.file("neg.csv", "-1\n")}).code, 2);
  EXPECT_EQ(run_cli({"estimate", "--family", "gamma_scale", "--param", "alpha", "--input",
                     dir.file("p.csv", "1\n")}).code, 3);
  EXPECT_EQ(run_cli({"estimate", "--bogus"}).code, 3);
  EXPECT_EQ(run_cli({}).code, 3);
}

TEST(CliEstimate, OutputFileAndCsvFormat) {
  TempDir dir;
  const std::string out = dir.path("out.csv");
  const CliRun r = run_cli({"estimate", "--family", "uniform_scale", "--input", dir.file("a.csv", "1\n3\n"),
                         "--format", "csv", "--output", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out), "theta_hat,gbar,residual,n\n4,2,0,2\n");
  EXPECT_FALSE(fs::exists(out + ".tmp"));
}

TEST(CliCheckFamily, Examples) {
  const CliRun g2 = run_cli({"check-family", "--family", "gamma_scale", "--param", "alpha=2", "--theta", "0.5",
                          "--theta2", "4"});
  ASSERT_EQ(g2.code, 0) << g2.err;
  const json j = json::parse(g2.out);
  EXPECT_EQ(j["tp2"]["verdict"], "holds");
  EXPECT_EQ(j["logconcave"]["verdict"], "holds");
  EXPECT_EQ(j["logconcave"]["per_theta"].size(), 5u);
  EXPECT_EQ(j["m_monotone"]["verdict"], "holds");
  EXPECT_EQ(j["m_monotone"]["direction"], "increasing");

  const CliRun half = run_cli({"check-family", "--family", "gamma_scale", "--param", "alpha=0.5", "--theta", "0.5",
                            "--theta2", "4"});
  ASSERT_EQ(half.code, 0) << half.err;
  const json jh = json::parse(half.out);
  EXPECT_EQ(jh["logconcave"]["verdict"], "fails");
  EXPECT_FALSE(jh["logconcave"]["per_theta"][0]["witnesses"].empty());

  const CliRun sym = run_cli({"check-family", "--family", "uniform_sym", "--spec", "k-th:2", "--theta", "0.5",
                           "--theta2", "2"});
  ASSERT_EQ(sym.code, 0) << sym.err;
  const json js = json::parse(sym.out);
  EXPECT_EQ(js["tp2"]["verdict"], "fails");
  EXPECT_FALSE(js["tp2"]["witnesses"].empty());
}

TEST(CliCheckFamily, GridErrors) {
  EXPECT_EQ(run_cli({"check-family", "--family", "gamma_scale", "--theta", "2", "--theta2", "1"}).code, 3);
  EXPECT_EQ(run_cli({"check-family", "--family", "gamma_scale", "--theta", "1"}).code, 3);
  EXPECT_EQ(run_cli({"check-family", "--family", "gamma_scale", "--theta", "1", "--theta2", "2",
                     "--grid-size", "1"}).code, 3);
  EXPECT_EQ(run_cli({"check-family", "--family", "gamma_scale", "--theta", "-1", "--theta2", "2"}).code, 2);
}

TEST(CliCheckOrder, GammaScalePair) {
  const CliRun r = run_cli({"check-order", "--family", "gamma_scale", "--param", "alpha=2", "--theta", "1",
                         "--theta2", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["st"]["verdict"], "holds");
  EXPECT_EQ(j["lr"]["verdict"], "holds");
  EXPECT_EQ(j["disp"]["verdict"], "holds");
  const CliRun rev = run_cli({"check-order", "--family", "gamma_scale", "--theta", "2", "--theta2", "1"});
  ASSERT_EQ(rev.code, 0);
  EXPECT_EQ(json::parse(rev.out)["st"]["verdict"], "fails");
}

TEST(CliSimulate, ExpLogisticStHolds) {
  const CliRun r = run_cli({"simulate", "--family", "exp_logistic", "--spec", "T", "--theta", "1", "--theta2", "2",
                         "--n", "20", "--reps", "20000", "--seed", "42"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["st"]["verdict"], "holds");
  EXPECT_EQ(j["theorem"], "statistic-st");
  EXPECT_EQ(j["request"]["seed"], 42);
  EXPECT_NE(r.err.find("st: holds"), std::string::npos);
}

TEST(CliSimulate, LogisticLocationLr) {
  const CliRun r = run_cli({"simulate", "--family", "logistic_loc", "--estimator", "location-mean", "--theta", "0",
                         "--theta2", "1", "--n", "15", "--reps", "20000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["theorem"], "location-lr");
  EXPECT_EQ(j["lr"]["verdict"], "holds");
  EXPECT_EQ(j["st"]["verdict"], "holds");
  EXPECT_EQ(j["request"]["seed"], 20240915);
}

TEST(CliSimulate, ByteIdenticalAcrossRunsAndThreads) {
  TempDir dir;
  const std::vector<std::string> base = {"simulate", "--family", "gamma_scale", "--param", "alpha=2",
                                         "--reps", "3000", "--theorem", "mean-lr"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const CliRun a = run_cli(with({"--output", dir.path("a.json"), "--csv", dir.path("a.csv")}));
  const CliRun b = run_cli(with({"--output", dir.path("b.json"), "--csv", dir.path("b.csv"), "--threads", "4"}));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir.path("a.json")), slurp(dir.path("b.json")));
  EXPECT_EQ(slurp(dir.path("a.csv")), slurp(dir.path("b.csv")));
  EXPECT_EQ(a.out, b.out);
  const std::string csv = slurp(dir.path("a.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "replicate,theta,theta_hat");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6001);
}

TEST(CliSimulate, ErrorsMapToExitCodes) {
  // More than 1% infeasible replicates.
  EXPECT_EQ(run_cli({"simulate", "--family", "weibull_theta", "--spec", "log", "--n", "1", "--reps", "1000"}).code,
            2);
  EXPECT_EQ(run_cli({"simulate", "--family", "gamma_scale", "--reps", "10"}).code, 3);
  EXPECT_EQ(run_cli({"simulate", "--family", "gamma_scale", "--estimator", "fancy"}).code, 3);
  EXPECT_EQ(run_cli({"simulate", "--family", "gamma_scale", "--theta", "3", "--theta2", "1"}).code, 2);
}

#ifdef MMORDER_CLI_PATH
TEST(CliBinary, ExitStatusFromProcess) {
  TempDir dir;
  const std::string cmd = std::string(MMORDER_CLI_PATH) + " estimate --family uniform_scale --input " +
                          dir.file("e.csv", "") + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 3);
}
#endif
