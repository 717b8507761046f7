// Drives the installed command-line tool as a subprocess.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
};

Result Invoke(const std::string& args) {
  const std::string cmd = std::string(RT_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rt_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, DareZeroDynamics) {
  const fs::path dir = Scratch("dare");
  std::ofstream(dir / "sys.json") << R"({"system": {"A": 0, "B": 1, "Rx": 1, "Ru": 1}})";
  const Result r = Invoke("dare " + (dir / "sys.json").string() + " --json " + (dir / "report.json").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "P_inf =\n  [1]\nK_inf =\n  [0]\nSigma_inf =\n  [2]\nkappa_inf = 1\ngamma_inf = 0\n"
            "Psi* = 1\nbeta* = 1\nGamma* = 1\nresidual = 0.000e+00\n");
  const Json j = Json::parse(Slurp(dir / "report.json"));
  EXPECT_EQ(j["gamma"].get<double>(), 0.0);
}

TEST(Cli, DareGoldenRatio) {
  const fs::path dir = Scratch("golden");
  std::ofstream(dir / "sys.json") << R"({"system": {"A": 1, "B": 1, "Rx": 1, "Ru": 1}})";
  const Result r = Invoke("dare " + (dir / "sys.json").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("P_inf =\n  [1.618033989]"), std::string::npos) << r.out;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = Scratch("codes");
  std::ofstream(dir / "broken.json") << R"({"system": )";
  EXPECT_EQ(Invoke("dare " + (dir / "broken.json").string()).code, 2);
  std::ofstream(dir / "unknown.json") << R"({"system": {"A": 0, "B": 1, "Rx": 1, "Ru": 1}, "colour": 1})";
  EXPECT_EQ(Invoke("dare " + (dir / "unknown.json").string()).code, 2);
  std::ofstream(dir / "unstab.json") << R"({"system": {"A": 2, "B": 0, "Rx": 1, "Ru": 1}})";
  EXPECT_EQ(Invoke("dare " + (dir / "unstab.json").string()).code, 3);
  EXPECT_EQ(Invoke("frobnicate").code, 2);
  EXPECT_EQ(Invoke("counterexample --T 4").code, 2);
}

TEST(Cli, RunWritesArtifactsDeterministically) {
  const fs::path dir = Scratch("run");
  std::ofstream(dir / "cfg.json") << R"({
    "system": {"A": 0.9, "B": 1, "Rx": 1, "Ru": 1},
    "disturbance": {"kind": "rademacher", "seed": 3},
    "T_list": [16, 32, 64]
  })";
  const Result a = Invoke("run " + (dir / "cfg.json").string() + " --out " + (dir / "a").string());
  const Result b = Invoke("run " + (dir / "cfg.json").string() + " --out " + (dir / "b").string());
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(Slurp(dir / "a" / "regret.csv"), Slurp(dir / "b" / "regret.csv"));
  EXPECT_EQ(Slurp(dir / "a" / "baseline.csv"), Slurp(dir / "b" / "baseline.csv"));
  EXPECT_EQ(Slurp(dir / "a" / "regret.csv"), a.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 4);
  const Json meta = Json::parse(Slurp(dir / "a" / "metadata.json"));
  EXPECT_EQ(meta["command"], "run");
  EXPECT_FALSE(fs::exists(dir / "a" / "regret.csv.tmp"));
}

TEST(Cli, RunZeroDisturbanceHasZeroRegret) {
  const fs::path dir = Scratch("zero");
  std::ofstream(dir / "cfg.json") << R"({
    "system": {"A": 0.9, "B": 1, "Rx": 1, "Ru": 1},
    "disturbance": {"kind": "zero"},
    "T_list": [16, 32]
  })";
  const Result r = Invoke("run " + (dir / "cfg.json").string() + " --comparator-mode both --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_NE(line.find(",0,0,0,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Cli, Counterexample) {
  const fs::path dir = Scratch("ce");
  const Result r = Invoke("counterexample --T 16,64,256,1024,4096 --epsilon 2.5 --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "T,lambda_regret,movement_cost,stationarization_gap");
  const Json meta = Json::parse(Slurp(dir / "counterexample.json"));
  EXPECT_EQ(meta["epsilon_override"].get<double>(), 2.5);
  EXPECT_EQ(Slurp(dir / "counterexample.csv"), r.out);
}
