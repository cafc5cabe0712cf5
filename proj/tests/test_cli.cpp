#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lora_esl/report_io.hpp"
#include "lora_esl/scenario_io.hpp"

using namespace lora_esl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + LORA_ESL_BIN + std::string(" ") + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lora_esl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    Scenario s = default_scenario(PolicyKind::Rssi, 2);
    s.allocation.first_term = 20;
    s.allocation.common_diff = 10;
    s.traffic.horizon_s = 3600.0;
    s.seed = 4;
    std::ofstream(dir_ / "small.json") << serialize_scenario(s);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, AllocateTableColumns) {
  auto r = run("allocate --gws 10");
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_NE(r.out.find("0,0.70,20,200"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("4,1.60,60,600"), std::string::npos);
  EXPECT_NE(r.out.find("5,2.10,20,200"), std::string::npos);
  r = run("allocate --gws 20");
  EXPECT_NE(r.out.find("0,0.70,10,200"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1,0.90,15,300"), std::string::npos);
  EXPECT_NE(r.out.find("4,1.60,30,600"), std::string::npos);
  r = run("allocate --gws 1 --diff 0 --first 100");
  for (int ring = 0; ring < 6; ++ring) EXPECT_NE(r.out.find(std::to_string(ring) + ","), std::string::npos);
  EXPECT_NE(r.out.find("total,,600,600"), std::string::npos) << r.out;
}

TEST_F(CliTest, AllocateBadArgsIsUsageError) {
  EXPECT_EQ(run("allocate --gws 0").rc, 1);
  EXPECT_EQ(run("allocate --gws ten").rc, 1);
  EXPECT_EQ(run("allocate --kind pyramid").rc, 1);
}

TEST_F(CliTest, LinkBudgetChain) {
  auto r = run("linkbudget --tp 14 --gtx 2.15 --lpl 127.84");
  ASSERT_EQ(r.rc, 0);
  EXPECT_NE(r.out.find("rssi_dbm -111.69"), std::string::npos) << r.out;
  r = run("linkbudget --tp 14 --gtx 2.15 --lpl 127.84 --grx 2.15");
  EXPECT_NE(r.out.find("rp_dbw -139.54"), std::string::npos) << r.out;
  r = run("linkbudget --lpl 0 --tp 0 --gtx 0");
  EXPECT_NE(r.out.find("rssi_dbm 0.00"), std::string::npos) << r.out;
}

TEST_F(CliTest, LinkBudgetDomainErrorNamesStep) {
  const auto r = run("linkbudget --distance 0.1 --ref-distance 0.6");
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.out.find("path loss"), std::string::npos) << r.out;
}

TEST_F(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(run("").rc, 1);
  EXPECT_EQ(run("frobnicate").rc, 1);
  EXPECT_EQ(run("--help").rc, 0);
}

TEST_F(CliTest, ClusterPrintsCentroids) {
  const auto r = run("cluster " + path("small.json") + " --k 3");
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_NE(r.out.find("cluster,x_km,y_km,members,radius_km"), std::string::npos);
  EXPECT_NE(r.out.find("\n2,"), std::string::npos);
}

TEST_F(CliTest, SimulateWritesReportAndSummary) {
  const auto r = run("simulate " + path("small.json") + " --out " + path("out"));
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_NE(r.out.find("total_plr"), std::string::npos);
  EXPECT_NE(r.out.find("above_threshold_fraction"), std::string::npos);
  ASSERT_TRUE(fs::exists(dir_ / "out" / "report.json"));
  ASSERT_TRUE(fs::exists(dir_ / "out" / "scenario.json"));
  const json doc = json::parse(slurp(dir_ / "out" / "report.json"));
  EXPECT_EQ(doc["gw_count"].get<int>(), 2);
}

TEST_F(CliTest, CsvAndJsonCarrySameNumbers) {
  ASSERT_EQ(run("simulate " + path("small.json") + " --out " + path("j") + " --format json").rc, 0);
  ASSERT_EQ(run("simulate " + path("small.json") + " --out " + path("c") + " --format csv").rc, 0);
  const json doc = json::parse(slurp(dir_ / "j" / "report.json"));
  std::istringstream csv(slurp(dir_ / "c" / "report.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kReportCsvHeader);
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() < 7) continue;  // empty value
    const auto& v = doc["rings"][static_cast<std::size_t>(std::stoi(c[3]))][c[5]];
    EXPECT_DOUBLE_EQ(std::stod(c[6]), v.get<double>()) << line;
    ++rows;
  }
  EXPECT_GT(rows, 80);
}

TEST_F(CliTest, RerunIsByteIdentical) {
  ASSERT_EQ(run("simulate " + path("small.json") + " --out " + path("a")).rc, 0);
  ASSERT_EQ(run("simulate " + path("small.json") + " --out " + path("b")).rc, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "report.json"), slurp(dir_ / "b" / "report.json"));
}

TEST_F(CliTest, MissingFileLeavesNoOutput) {
  const auto r = run("simulate " + path("nope.json") + " --out " + path("never"));
  EXPECT_EQ(r.rc, 3);
  EXPECT_FALSE(fs::exists(dir_ / "never"));
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  std::ofstream(dir_ / "bad.json") << R"({"radio": {"bw_khz": 125, "spread": 7}})";
  auto r = run("simulate " + path("bad.json") + " --out " + path("x"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.out.find("radio.spread"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "x"));

  std::ofstream(dir_ / "broken.json") << "{\n  \"seed\": 1,\n  oops\n}\n";
  r = run("simulate " + path("broken.json") + " --out " + path("y"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.out.find("line 3"), std::string::npos) << r.out;
}

TEST_F(CliTest, SeedFromEnvironment) {
  ASSERT_EQ(run("simulate " + path("small.json") + " --out " + path("e"), "LORA_ESL_SEED=99").rc, 0);
  EXPECT_EQ(load_scenario(dir_ / "e" / "scenario.json").seed, 99u);
  EXPECT_EQ(json::parse(slurp(dir_ / "e" / "report.json"))["seed"].get<std::uint64_t>(), 99u);
  EXPECT_EQ(run("simulate " + path("small.json") + " --out " + path("f"), "LORA_ESL_SEED=abc").rc, 2);
}

TEST_F(CliTest, SweepWritesOneReportPerCount) {
  const auto r = run("sweep " + path("small.json") + " --gws 1,2,4,10,20 --out " + path("sw"));
  ASSERT_EQ(r.rc, 0) << r.out;
  for (int g : {1, 2, 4, 10, 20})
    EXPECT_TRUE(fs::exists(dir_ / "sw" / ("report_gw" + std::to_string(g) + ".json"))) << g;
  ASSERT_TRUE(fs::exists(dir_ / "sw" / "comparison.csv"));
  std::istringstream csv(slurp(dir_ / "sw" / "comparison.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kComparisonCsvHeader);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 30);

  ASSERT_EQ(run("sweep " + path("small.json") + " --gws 1,2,4,10,20 --out " + path("sw2")).rc, 0);
  EXPECT_EQ(slurp(dir_ / "sw" / "comparison.csv"), slurp(dir_ / "sw2" / "comparison.csv"));
  EXPECT_EQ(slurp(dir_ / "sw" / "report_gw4.json"), slurp(dir_ / "sw2" / "report_gw4.json"));
}

TEST_F(CliTest, ComparePoliciesWritesCsv) {
  const auto r = run("compare " + path("small.json") + " --out " + path("cmp"));
  ASSERT_EQ(r.rc, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "policy_comparison.csv"));
}

TEST_F(CliTest, BundledTenGatewayScenario) {
  const auto r = run(std::string("simulate ") + LORA_ESL_SCENARIOS + "/ten_gw_rssi.json --out " + path("ten"));
  ASSERT_EQ(r.rc, 0) << r.out;
  const json doc = json::parse(slurp(dir_ / "ten" / "report.json"));
  EXPECT_GE(doc["totals"]["rp_above_fraction"].get<double>(), 0.99);
}
