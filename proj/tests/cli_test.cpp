// Runs the built command-line binary end to end.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gam/io.hpp"

#ifndef GAM_CLI_PATH
#error "GAM_CLI_PATH must point at the built CLI"
#endif

namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(GAM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, {}};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gam_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

TEST_F(Cli, IdenticalAttributionsGiveZeroMatrix) {
  write("same.csv", "a,b,c\n0.5,0.3,0.2\n0.5,0.3,0.2\n0.5,0.3,0.2\n");
  const auto r = run("distances --attributions " + path("same.csv") + " --metric spearman");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0,0,0\n0,0,0\n0,0,0\n");
}

TEST_F(Cli, ZeroKIsUsageError) {
  write("a.csv", "a,b\n1,2\n2,1\n");
  EXPECT_EQ(run("gam --attributions " + path("a.csv") + " --k 0 --seed 1").code, 1);
}

TEST_F(Cli, UsageErrors) {
  write("a.csv", "a,b\n1,2\n2,1\n");
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("gam --attributions " + path("a.csv") + " --k 2 --bogus").code, 1);
  EXPECT_EQ(run("gam --attributions " + path("a.csv")).code, 1);
  EXPECT_EQ(run("gam --attributions " + path("a.csv") + " --k 2 --auto-k 2 3").code, 1);
  EXPECT_EQ(run("distances --attributions " + path("a.csv") + " --metric pearson").code, 1);
  EXPECT_EQ(run("nope").code, 1);
}

TEST_F(Cli, DataErrors) {
  write("zero.csv", "a,b\n0,0\n1,2\n");
  write("ragged.csv", "a,b\n1\n");
  write("two.csv", "a,b\n1,2\n2,1\n");
  EXPECT_EQ(run("distances --attributions " + path("zero.csv")).code, 2);
  EXPECT_EQ(run("distances --attributions " + path("ragged.csv")).code, 2);
  EXPECT_EQ(run("gam --attributions " + path("two.csv") + " --k 3").code, 2);
}

TEST_F(Cli, FailedRunLeavesNoOutput) {
  write("zero.csv", "a,b\n0,0\n1,2\n");
  EXPECT_EQ(run("distances --attributions " + path("zero.csv") + " --out " + path("d.csv")).code, 2);
  EXPECT_FALSE(fs::exists(path("d.csv")));
  EXPECT_FALSE(fs::exists(path("d.csv.tmp")));
}

TEST_F(Cli, EndToEndIsByteIdentical) {
  ASSERT_EQ(run("synth --variant balanced --n 200 --seed 3 --out " + path("data.csv")).code, 0);
  ASSERT_EQ(run("train --data " + path("data.csv") + " --hidden 4 --epochs 30 --seed 3 --out " + path("model.json")).code, 0);
  for (const char* tag : {"1", "2"}) {
    const std::string attrs = path(std::string("attrs") + tag + ".csv");
    const std::string map = path(std::string("map") + tag + ".json");
    ASSERT_EQ(run("explain --model " + path("model.json") + " --data " + path("data.csv") +
                  " --samples 200 --seed 4 --out " + attrs).code, 0);
    ASSERT_EQ(run("gam --attributions " + attrs + " --k 2 --metric kendall --seed 1 --out " + map).code, 0);
  }
  EXPECT_EQ(slurp(path("attrs1.csv")), slurp(path("attrs2.csv")));
  EXPECT_EQ(slurp(path("map1.json")), slurp(path("map2.json")));
  EXPECT_NE(slurp(path("map1.json")).find("\"clusters\""), std::string::npos);

  const auto dot = run("graph --attributions " + path("attrs1.csv") + " --map " + path("map1.json"));
  EXPECT_EQ(dot.code, 0);
  EXPECT_EQ(dot.out.rfind("graph gam {", 0), 0u);

  const auto sel = run("select-k --attributions " + path("attrs1.csv") + " --auto-k 2 4 --restarts 2");
  EXPECT_EQ(sel.code, 0);
  EXPECT_NE(sel.out.find("\"scores\""), std::string::npos);

  const auto auto_k = run("gam --attributions " + path("attrs1.csv") + " --auto-k 2 3 --restarts 2");
  EXPECT_EQ(auto_k.code, 0);
}

TEST_F(Cli, ClusterFromDistances) {
  write("d.csv", "0,1,9,9\n1,0,9,9\n9,9,0,1\n9,9,1,0\n");
  const auto r = run("cluster --distances " + path("d.csv") + " --k 2 --seed 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"assignment\""), std::string::npos);
}

}  // namespace
