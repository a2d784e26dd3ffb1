// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "moee/cli.hpp"
#include "moee/engine.hpp"
#include "moee/store.hpp"
#include "test_support.hpp"

namespace moee {
namespace {

const std::string kFixtures = MOEE_FIXTURE_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// The value column of the first data row of a score table.
double table_value(const std::string& table) {
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);  // config
  std::getline(in, line);  // header
  std::getline(in, line);
  return std::stod(line.substr(line.find_last_of(' ') + 1));
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run({"gen-model", "--layers", "2", "--dim", "8", "--experts", "4", "--topk", "2", "--seed",
                   "7", "-o", (dir / "m.moem").string()})
                  .code,
              0);
    ASSERT_EQ(run({"run", "-m", (dir / "m.moem").string(), "--dataset", "sts:" + kFixtures + "/sts.jsonl",
                   "--dataset", "clustering:" + kFixtures + "/clustering.jsonl", "-o",
                   (dir / "a.moea").string()})
                  .code,
              0);
  }
  test::TempDir dir;
};

TEST(Cli, HelpForEverySubcommand) {
  EXPECT_EQ(run({"--help"}).code, 0);
  for (const char* sub : {"gen-model", "run", "embed", "eval", "sweep", "validate", "analyze"}) {
    auto r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
  for (const char* sub : {"agreement", "prompts", "prompt-corr", "errors"}) {
    EXPECT_EQ(run({"analyze", sub, "--help"}).code, 0) << sub;
  }
}

TEST(Cli, UsageErrorsExitTwoWithHelp) {
  auto r = run({"gen-model", "--bogus-flag", "-o", "x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({"gen-model"}).code, 2);  // -o is required
}

TEST(Cli, DomainErrorsExitOne) {
  test::TempDir dir;
  auto r = run({"gen-model", "--experts", "4", "--topk", "5", "-o", (dir / "m.moem").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("top_k exceeds experts"), std::string::npos);
  EXPECT_EQ(run({"embed", "-c", (dir / "missing.moea").string()}).code, 1);
}

TEST(Cli, GenModelWritesParsableFile) {
  test::TempDir dir;
  auto r = run({"gen-model", "--layers", "2", "--dim", "8", "--experts", "4", "--topk", "2", "--seed", "7",
                "-o", (dir / "m.moem").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("# moee {", 0), 0u);
  auto m = load_model(dir / "m.moem");
  EXPECT_EQ(m.config.experts_per_layer, (std::vector<int>{4, 4}));
  EXPECT_EQ(m.config.rng_seed, 7u);
  EXPECT_EQ(m.config.ffn_dim, 16);
}

TEST(Cli, SeedFallsBackToEnvironment) {
  test::TempDir dir;
  ::setenv("MOEE_SEED", "7", 1);
  ASSERT_EQ(run({"gen-model", "-o", (dir / "env.moem").string()}).code, 0);
  ::unsetenv("MOEE_SEED");
  ASSERT_EQ(run({"gen-model", "--seed", "7", "-o", (dir / "flag.moem").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "env.moem"), slurp(dir / "flag.moem"));
}

TEST_F(CliPipeline, ValidateExitCodes) {
  auto ok = run({"validate", (dir / "a.moea").string()});
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("0 failures"), std::string::npos);
  std::ofstream(dir / "junk.moea") << "XXXXjunk";
  EXPECT_EQ(run({"validate", (dir / "junk.moea").string()}).code, 1);
  auto js = run({"validate", "--json", (dir / "a.moea").string()});
  EXPECT_EQ(nlohmann::json::parse(js.out)[0]["failures"], 0);
}

TEST_F(CliPipeline, AlphaZeroMatchesHsMode) {
  const auto sts = kFixtures + "/sts.jsonl";
  const auto c = (dir / "a.moea").string();
  auto sum0 = run({"eval", "sts", "--dataset", sts, "-c", c, "--alpha", "0"});
  auto hs = run({"eval", "sts", "--dataset", sts, "-c", c, "--mode", "hs"});
  ASSERT_EQ(sum0.code, 0) << sum0.err;
  ASSERT_EQ(hs.code, 0) << hs.err;
  EXPECT_EQ(table_value(sum0.out), table_value(hs.out));
}

TEST_F(CliPipeline, OutputsAreByteIdenticalAcrossRunsAndJobs) {
  const auto m = (dir / "m.moem").string();
  const auto sts = "sts:" + kFixtures + "/sts.jsonl";
  ASSERT_EQ(run({"run", "-m", m, "--dataset", sts, "--jobs", "1", "-o", (dir / "j1.moea").string()}).code, 0);
  ASSERT_EQ(run({"run", "-m", m, "--dataset", sts, "--jobs", "8", "-o", (dir / "j8.moea").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "j1.moea"), slurp(dir / "j8.moea"));

  auto sweep = [&](const char* jobs, const std::string& out) {
    return run({"sweep", "--task", sts, "--task", "clustering:" + kFixtures + "/clustering.jsonl", "-c",
                (dir / "a.moea").string(), "--alphas", "0.5,1,2", "--jobs", jobs, "-o", out});
  };
  auto a = sweep("1", (dir / "s1.jsonl").string());
  auto b = sweep("8", (dir / "s8.jsonl").string());
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(dir / "s1.jsonl"), slurp(dir / "s8.jsonl"));
  EXPECT_EQ(slurp(dir / "s1.jsonl").rfind("{\"config\":", 0), 0u);
}

TEST_F(CliPipeline, EmbedWritesConfigThenRows) {
  auto r = run({"embed", "-c", (dir / "a.moea").string(), "--strategy", "rw:last"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_TRUE(nlohmann::json::parse(line).contains("config"));
  std::getline(in, line);
  auto row = nlohmann::json::parse(line);
  EXPECT_EQ(row["dim"], 8);
  EXPECT_EQ(row["strategy"], "rw:last");
}

TEST_F(CliPipeline, AnalyzeSubcommands) {
  const auto c = (dir / "a.moea").string();
  const auto sts = kFixtures + "/sts.jsonl";
  auto agree = run({"analyze", "agreement", "-c", c, "--k", "3"});
  ASSERT_EQ(agree.code, 0) << agree.err;
  EXPECT_NE(agree.out.find("\"exact_match_pct\""), std::string::npos);

  auto errs = run({"analyze", "errors", "--dataset", sts, "-c", c, "--tau", "0.2"});
  ASSERT_EQ(errs.code, 0) << errs.err;
  EXPECT_NE(errs.out.find("\"tau\":0.2"), std::string::npos);

  // Prompted containers for two prompts, then the correlation matrix.
  const auto m = (dir / "m.moem").string();
  for (const char* p : {"1", "10"}) {
    ASSERT_EQ(run({"run", "-m", m, "--dataset", "sts:" + sts, "--prompt", p, "-o",
                   (dir / (std::string("p") + p + ".moea")).string()})
                  .code,
              0);
  }
  auto corr = run({"analyze", "prompt-corr", "--dataset", sts, "-c", (dir / "p1.moea").string(), "-c",
                   (dir / "p10.moea").string(), "--prompts", "1,10", "-o", (dir / "corr.csv").string()});
  ASSERT_EQ(corr.code, 0) << corr.err;
  auto csv = slurp(dir / "corr.csv");
  EXPECT_NE(csv.find("config,HS-1,HS-10,RW-1,RW-10"), std::string::npos);

  auto sw = run({"sweep", "--task", "sts:" + sts, "-c", (dir / "p1.moea").string(), "-c",
                 (dir / "p10.moea").string(), "--prompts", "1,10", "--strategies", "hs:last:last,rw:last",
                 "-o", (dir / "sw.jsonl").string()});
  ASSERT_EQ(sw.code, 0) << sw.err;
  auto pr = run({"analyze", "prompts", "--results", (dir / "sw.jsonl").string()});
  ASSERT_EQ(pr.code, 0) << pr.err;
  EXPECT_NE(pr.out.find("rw:last"), std::string::npos);
  // One prompt only: insufficient data is a domain error.
  auto single = run({"sweep", "--task", "sts:" + sts, "-c", (dir / "p1.moea").string(), "--prompts", "1",
                     "-o", (dir / "one.jsonl").string()});
  ASSERT_EQ(single.code, 0);
  EXPECT_EQ(run({"analyze", "prompts", "--results", (dir / "one.jsonl").string()}).code, 1);
}

}  // namespace
}  // namespace moee
