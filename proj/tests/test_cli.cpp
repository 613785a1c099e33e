#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "softder/scenario.hpp"

namespace {

namespace fs = std::filesystem;

struct Output {
  int code = -1;
  std::string out;
};

Output der_tool(const std::string& args) {
  const std::string cmd = std::string(DER_TOOL_PATH) + " " + args + " 2>&1";
  Output r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path workdir() {
  const fs::path dir = fs::temp_directory_path() / "softder_cli";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& json) {
  const fs::path p = workdir() / name;
  std::ofstream(p) << json;
  return p.string();
}

// Value printed after "mean" on the report line starting with `label`.
std::string reported_mean(const std::string& out, const std::string& label) {
  std::size_t at = out.rfind("\n" + label + " ");
  at = at == std::string::npos ? (out.rfind(label + " ", 0) == 0 ? 0 : at) : at + 1;
  if (at == std::string::npos) return "";
  const std::size_t m = out.find("mean ", at);
  if (m == std::string::npos) return "";
  const std::size_t start = m + 5;
  return out.substr(start, out.find(' ', start) - start);
}

const std::string kShort = R"({"name": "short", "horizon": 1.0})";

TEST(Cli, SchemaPrintsJsonSchema) {
  const Output r = der_tool("schema");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.front(), '{');
  EXPECT_NE(r.out.find("\"additionalProperties\": false"), std::string::npos);
}

TEST(Cli, VerifyPasses) {
  const Output r = der_tool("verify");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
}

TEST(Cli, ValidationErrorsExitTwo) {
  EXPECT_EQ(der_tool("generate --scenario " + write_config("neg.json", R"({"horizon": -1.0})")).code, 2);
  EXPECT_EQ(der_tool("generate --scenario " + write_config("key.json", R"({"horizn": 1.0})")).code, 2);
  EXPECT_EQ(der_tool("generate --scenario " + write_config("bad.json", "{ not json")).code, 2);
  EXPECT_EQ(der_tool("generate --model rod").code, 2);
  EXPECT_EQ(der_tool("").code, 2);
  EXPECT_EQ(der_tool("compare --scenario " + write_config("p.json", kShort) + " --perturb -1").code, 2);
}

TEST(Cli, NumericalFailureExitsThree) {
  const std::string path =
      write_config("singular.json", R"({"horizon": 1.0, "actuation": {"lambda": [[1, 1], [1, 1]]}})");
  const Output r = der_tool("generate --scenario " + path);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("Lambda"), std::string::npos);
}

TEST(Cli, IoErrorsExitFour) {
  EXPECT_EQ(der_tool("generate --scenario /nonexistent/s.json").code, 4);
  const std::string path = write_config("short.json", kShort);
  EXPECT_EQ(der_tool("generate --scenario " + path + " --out /nonexistent/dir/x").code, 4);
  EXPECT_EQ(der_tool("simulate --scenario " + path + " --inputs /nonexistent/u.csv").code, 4);
}

TEST(Cli, GenerateThenReplayTable) {
  const std::string path = write_config("short.json", kShort);
  const std::string prefix = (workdir() / "gen").string();
  const Output gen = der_tool("generate --scenario " + path + " --out " + prefix);
  ASSERT_EQ(gen.code, 0) << gen.out;
  ASSERT_TRUE(fs::exists(prefix + ".csv"));
  ASSERT_TRUE(fs::exists(prefix + "_metrics.csv"));
  std::ifstream in(prefix + ".csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 69);

  // Open-loop replay of the exported inputs on the unperturbed plant lands on
  // the generated tips, so the reported error is the same.
  const Output sim = der_tool("simulate --scenario " + path + " --inputs " + prefix + ".csv");
  ASSERT_EQ(sim.code, 0) << sim.out;
  const std::string a = reported_mean(gen.out, "der"), b = reported_mean(sim.out, "u");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Cli, ReplayRejectsWrongInterval) {
  const std::string path = write_config("short.json", kShort);
  const std::string table = (workdir() / "slow.csv").string();
  std::ofstream(table) << "t,u0,u1\n0,0,0\n0.1,0,0\n0.2,0,0\n";
  EXPECT_EQ(der_tool("simulate --scenario " + path + " --inputs " + table).code, 2);
}

TEST(Cli, CompareWritesBothTables) {
  const std::string prefix = (workdir() / "cmp").string();
  const Output r = der_tool("compare --scenario " + write_config("short.json", kShort) + " --out " + prefix);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_FALSE(reported_mean(r.out, "der").empty());
  EXPECT_FALSE(reported_mean(r.out, "pcc").empty());
  for (const char* f : {"_der.csv", "_pcc.csv", "_der_metrics.csv", "_pcc_metrics.csv"}) {
    EXPECT_TRUE(fs::exists(prefix + f)) << f;
  }
}

TEST(Cli, SweepPrintsFivePoints) {
  const Output r = der_tool("compare --sweep --scenario " + write_config("short.json", kShort));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {" 0.90 ", " 0.95 ", " 1.00 ", " 1.05 ", " 1.10 ", "  mean "}) {
    EXPECT_NE(r.out.find(f), std::string::npos) << f;
  }
}

TEST(Cli, ShippedScenariosLoad) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(SCENARIO_DIR)) {
    EXPECT_NO_THROW(softder::load_scenario(entry.path().string())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 4);
}

}  // namespace
