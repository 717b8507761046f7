// riccatitron command-line tool. Links only the C interface.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "riccatitron.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

int Fail(rt_status status) {
  std::cerr << "error: " << rt_last_error() << "\n";
  return static_cast<int>(status);
}

// Takes ownership of a library string.
std::string Take(char* s) {
  std::string out(s);
  rt_string_free(s);
  return out;
}

bool WriteAtomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    if (!out.flush()) return false;
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return false;
  }
  return true;
}

std::string FormatMatrix(const Json& m) {
  std::string out;
  char buf[64];
  for (const Json& row : m) {
    out += "  [";
    for (size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof(buf), c == 0 ? "%.10g" : ", %.10g", row[c].get<double>());
      out += buf;
    }
    out += "]\n";
  }
  return out;
}

int CmdDare(const std::string& config_path, const std::string& json_path) {
  rt_system* system = nullptr;
  rt_status status = rt_system_load(config_path.c_str(), &system);
  if (status != RT_OK) return Fail(status);
  char* raw = nullptr;
  status = rt_dare_report(system, &raw);
  rt_system_destroy(system);
  if (status != RT_OK) return Fail(status);
  const std::string report = Take(raw);
  const Json j = Json::parse(report);
  std::printf("P_inf =\n%s", FormatMatrix(j["P"]).c_str());
  std::printf("K_inf =\n%s", FormatMatrix(j["K"]).c_str());
  std::printf("Sigma_inf =\n%s", FormatMatrix(j["Sigma"]).c_str());
  std::printf("kappa_inf = %.10g\n", j["kappa"].get<double>());
  std::printf("gamma_inf = %.10g\n", j["gamma"].get<double>());
  std::printf("Psi* = %.10g\nbeta* = %.10g\nGamma* = %.10g\n", j["psi_star"].get<double>(),
              j["beta_star"].get<double>(), j["gamma_star"].get<double>());
  std::printf("residual = %.3e\n", j["residual"].get<double>());
  if (json_path.empty()) {
    std::printf("%s\n", report.c_str());
  } else if (!WriteAtomic(json_path, report + "\n")) {
    std::cerr << "error: cannot write " << json_path << "\n";
    return 1;
  }
  return 0;
}

int CmdRun(const std::string& config_path, const std::string& mode, const std::string& out_override) {
  char* raw = nullptr;
  const rt_status status = rt_run_experiment(config_path.c_str(), mode.empty() ? nullptr : mode.c_str(), &raw);
  if (status != RT_OK) return Fail(status);
  const Json j = Json::parse(Take(raw));
  const fs::path dir = out_override.empty() ? fs::path(j["output_dir"].get<std::string>()) : fs::path(out_override);
  const std::string csv = j["regret_csv"].get<std::string>();
  if (!WriteAtomic(dir / "regret.csv", csv) ||
      !WriteAtomic(dir / "baseline.csv", j["baseline_csv"].get<std::string>()) ||
      !WriteAtomic(dir / "metadata.json", j["metadata"].get<std::string>() + "\n")) {
    std::cerr << "error: cannot write artifacts under " << dir << "\n";
    return 1;
  }
  std::cout << csv;
  return 0;
}

int CmdCounterexample(const std::vector<long>& T_list, std::optional<double> epsilon, bool unprojected,
                      const std::string& out_dir) {
  char* raw = nullptr;
  const double eps = epsilon.value_or(0.0);
  const rt_status status = rt_counterexample(T_list.data(), T_list.size(), epsilon ? &eps : nullptr,
                                             unprojected ? 0 : 1, &raw);
  if (status != RT_OK) return Fail(status);
  const Json j = Json::parse(Take(raw));
  const std::string csv = j["csv"].get<std::string>();
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    if (!WriteAtomic(dir / "counterexample.csv", csv) ||
        !WriteAtomic(dir / "counterexample.json", j["metadata"].get<std::string>() + "\n")) {
      std::cerr << "error: cannot write artifacts under " << dir << "\n";
      return 1;
    }
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online LQR control with logarithmic regret"};
  app.set_version_flag("--version", std::string(rt_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string json_path;
  auto* dare = app.add_subcommand("dare", "Solve the DARE for a config's system");
  dare->add_option("config", config_path, "experiment config (JSON)")->required();
  dare->add_option("--json", json_path, "write the JSON report here instead of stdout");

  std::string mode;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run a regret experiment");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--comparator-mode", mode, "prefix, fixed or both")
      ->check(CLI::IsMember({"prefix", "fixed", "both"}));
  run->add_option("--out", run_out, "output directory (overrides output_dir)");

  std::vector<long> T_list;
  std::optional<double> epsilon;
  bool unprojected = false;
  std::string ce_out;
  auto* ce = app.add_subcommand("counterexample", "Movement-cost counterexample for ONS");
  ce->add_option("--T", T_list, "horizons (T ≥ 16)")->required()->delimiter(',');
  ce->add_option("--epsilon", epsilon, "ONS ε override");
  ce->add_flag("--unprojected", unprojected, "skip the projection onto [-1/5, 1/5]");
  ce->add_option("--out", ce_out, "directory for counterexample.csv and counterexample.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return RT_ERR_CONFIG;
  }

  if (*dare) return CmdDare(config_path, json_path);
  if (*run) return CmdRun(config_path, mode, run_out);
  return CmdCounterexample(T_list, epsilon, unprojected, ce_out);
}
