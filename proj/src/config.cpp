#include "riccatitron/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"

namespace riccatitron {
namespace {

using Json = nlohmann::json;

void CheckKeys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  Require(obj.is_object(), where + " must be a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    Require(keys.count(item.key()) == 1, "unknown key \"" + item.key() + "\" in " + where);
  }
}

double Number(const Json& j, const std::string& where) {
  Require(j.is_number(), where + " must be a number");
  return j.get<double>();
}

long Integer(const Json& j, const std::string& where) {
  Require(j.is_number_integer(), where + " must be an integer");
  return j.get<long>();
}

Matrix ParseMatrix(const Json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  Require(j.is_array() && !j.empty(), where + " must be a nonempty row-major nested array");
  const size_t rows = j.size();
  Require(j[0].is_array() && !j[0].empty(), where + " rows must be nonempty arrays");
  const size_t cols = j[0].size();
  Matrix M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    Require(j[r].is_array() && j[r].size() == cols, where + " is ragged");
    for (size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          Number(j[r][c], where + " entries");
    }
  }
  return M;
}

Vector ParseVector(const Json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  Require(j.is_array() && !j.empty(), where + " must be a nonempty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = Number(j[i], where + " entries");
  return v;
}

LinearSystem ParseSystem(const Json& j) {
  CheckKeys(j, {"A", "B", "Rx", "Ru"}, "system");
  for (const char* key : {"A", "B", "Rx", "Ru"}) {
    Require(j.contains(key), std::string("system is missing \"") + key + "\"");
  }
  return LinearSystem::Make(ParseMatrix(j["A"], "system.A"), ParseMatrix(j["B"], "system.B"),
                            ParseMatrix(j["Rx"], "system.Rx"), ParseMatrix(j["Ru"], "system.Ru"));
}

DisturbanceGen ParseDisturbance(const Json& j, std::uint64_t default_seed) {
  CheckKeys(j, {"kind", "value", "direction", "frequency", "phase", "seed", "scale", "mu"}, "disturbance");
  Require(j.contains("kind") && j["kind"].is_string(), "disturbance.kind must be a string");
  const std::string kind = j["kind"].get<std::string>();
  DisturbanceGen g;
  g.seed = j.contains("seed") ? static_cast<std::uint64_t>(Integer(j["seed"], "disturbance.seed")) : default_seed;
  if (kind == "zero") {
    g.kind = DisturbanceGen::Kind::kZero;
  } else if (kind == "constant") {
    g.kind = DisturbanceGen::Kind::kConstant;
    Require(j.contains("value"), "constant disturbance needs \"value\"");
    g.value = ParseVector(j["value"], "disturbance.value");
  } else if (kind == "sinusoid") {
    g.kind = DisturbanceGen::Kind::kSinusoid;
    Require(j.contains("direction"), "sinusoid disturbance needs \"direction\"");
    g.direction = ParseVector(j["direction"], "disturbance.direction");
    g.frequency = j.contains("frequency") ? Number(j["frequency"], "disturbance.frequency") : 0.01;
    g.phase = j.contains("phase") ? Number(j["phase"], "disturbance.phase") : 0.0;
  } else if (kind == "clipped_gaussian") {
    g.kind = DisturbanceGen::Kind::kClippedGaussian;
    g.scale = j.contains("scale") ? Number(j["scale"], "disturbance.scale") : 1.0;
  } else if (kind == "rademacher") {
    g.kind = DisturbanceGen::Kind::kRademacher;
  } else if (kind == "alternating_bias") {
    g.kind = DisturbanceGen::Kind::kAlternatingBias;
    g.mu = j.contains("mu") ? Number(j["mu"], "disturbance.mu") : 0.0;
  } else {
    throw ConfigError("unknown disturbance kind \"" + kind + "\"");
  }
  return g;
}

ConfigOverrides ParseOverrides(const Json& j) {
  CheckKeys(j, {"h", "m", "R", "gamma", "dap_norm", "eta_ons", "epsilon_ons", "epsilon_vaw"},
            "controller.overrides");
  ConfigOverrides o;
  if (j.contains("h")) o.h = static_cast<int>(Integer(j["h"], "overrides.h"));
  if (j.contains("m")) o.m = static_cast<int>(Integer(j["m"], "overrides.m"));
  if (j.contains("R")) o.R = Number(j["R"], "overrides.R");
  if (j.contains("gamma")) o.gamma = Number(j["gamma"], "overrides.gamma");
  if (j.contains("dap_norm")) {
    Require(j["dap_norm"].is_string(), "overrides.dap_norm must be a string");
    const std::string n = j["dap_norm"].get<std::string>();
    if (n == "operator") {
      o.dap_norm = DapSet::BlockNorm::kOperator;
    } else if (n == "frobenius") {
      o.dap_norm = DapSet::BlockNorm::kFrobenius;
    } else {
      throw ConfigError("overrides.dap_norm must be \"operator\" or \"frobenius\"");
    }
  }
  if (j.contains("eta_ons")) o.eta_ons = Number(j["eta_ons"], "overrides.eta_ons");
  if (j.contains("epsilon_ons")) o.epsilon_ons = Number(j["epsilon_ons"], "overrides.epsilon_ons");
  if (j.contains("epsilon_vaw")) o.epsilon_vaw = Number(j["epsilon_vaw"], "overrides.epsilon_vaw");
  return o;
}

ControllerSpec ParseController(const Json& j) {
  CheckKeys(j, {"kind", "learner", "kappa0", "gamma0", "overrides", "K"}, "controller");
  ControllerSpec spec;
  if (j.contains("kind")) {
    Require(j["kind"].is_string(), "controller.kind must be a string");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "riccatitron") {
      spec.kind = ControllerKind::kRiccatitron;
    } else if (kind == "k_inf") {
      spec.kind = ControllerKind::kKInf;
    } else if (kind == "fixed_k") {
      spec.kind = ControllerKind::kFixedK;
    } else {
      throw ConfigError("unknown controller kind \"" + kind + "\"");
    }
  }
  if (j.contains("overrides")) spec.overrides = ParseOverrides(j["overrides"]);
  if (j.contains("learner")) {
    Require(j["learner"].is_string(), "controller.learner must be a string");
    const std::string learner = j["learner"].get<std::string>();
    if (learner == "vaw") {
      spec.overrides.learner = LearnerKind::kVaw;
    } else if (learner == "ons") {
      spec.overrides.learner = LearnerKind::kOns;
    } else {
      throw ConfigError("controller.learner must be \"vaw\" or \"ons\"");
    }
  }
  if (j.contains("kappa0")) spec.kappa0 = Number(j["kappa0"], "controller.kappa0");
  if (j.contains("gamma0")) spec.gamma0 = Number(j["gamma0"], "controller.gamma0");
  if (j.contains("K")) spec.K = ParseMatrix(j["K"], "controller.K");
  Require(spec.kind != ControllerKind::kFixedK || j.contains("K"), "fixed_k controller needs \"K\"");
  return spec;
}

ComparatorKind ParseComparatorKind(const std::string& name) {
  if (name == "best_dap") return ComparatorKind::kBestDap;
  if (name == "k_grid") return ComparatorKind::kKGrid;
  if (name == "k_inf") return ComparatorKind::kKInf;
  throw ConfigError("unknown comparator kind \"" + name + "\"");
}

ComparatorSpec ParseComparator(const Json& j) {
  CheckKeys(j, {"kind", "mode", "grid_points", "refine_passes", "pgd_iterations", "pgd_tol"}, "comparator");
  ComparatorSpec spec;
  if (j.contains("kind")) {
    Require(j["kind"].is_string(), "comparator.kind must be a string");
    spec.kind = ParseComparatorKind(j["kind"].get<std::string>());
  }
  if (j.contains("mode")) {
    Require(j["mode"].is_string(), "comparator.mode must be a string");
    spec.mode = ParseComparatorMode(j["mode"].get<std::string>());
  }
  if (j.contains("grid_points")) spec.grid.points = static_cast<int>(Integer(j["grid_points"], "comparator.grid_points"));
  if (j.contains("refine_passes")) {
    spec.grid.refine_passes = static_cast<int>(Integer(j["refine_passes"], "comparator.refine_passes"));
  }
  if (j.contains("pgd_iterations")) {
    spec.pgd.max_iter = static_cast<int>(Integer(j["pgd_iterations"], "comparator.pgd_iterations"));
  }
  if (j.contains("pgd_tol")) spec.pgd.tol = Number(j["pgd_tol"], "comparator.pgd_tol");
  Require(spec.pgd.max_iter >= 0 && spec.pgd.tol > 0.0, "comparator PGD settings must be positive");
  return spec;
}

Json Parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

Json MatrixJson(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ComparatorMode ParseComparatorMode(const std::string& name) {
  if (name == "prefix") return ComparatorMode::kPrefix;
  if (name == "fixed") return ComparatorMode::kFixed;
  if (name == "both") return ComparatorMode::kBoth;
  throw ConfigError("comparator mode must be prefix, fixed or both");
}

ExperimentConfig ParseExperimentConfig(const std::string& text) {
  const Json j = Parse(text);
  CheckKeys(j, {"system", "disturbance", "controller", "T", "T_list", "comparator", "seed", "output_dir"},
            "config");
  Require(j.contains("system"), "config is missing \"system\"");
  ExperimentConfig config;
  if (j.contains("seed")) {
    const long seed = Integer(j["seed"], "seed");
    Require(seed >= 0, "seed must be nonnegative");
    config.seed = static_cast<std::uint64_t>(seed);
  }
  config.system = ParseSystem(j["system"]);
  if (j.contains("disturbance")) {
    config.disturbance = ParseDisturbance(j["disturbance"], config.seed);
  } else {
    config.disturbance.seed = config.seed;
  }
  if (j.contains("controller")) config.controller = ParseController(j["controller"]);
  if (config.controller.kind == ControllerKind::kFixedK) {
    Require(config.controller.K.rows() == config.system.du() && config.controller.K.cols() == config.system.dx(),
            "controller.K must be du×dx");
  }
  Require(!(j.contains("T") && j.contains("T_list")), "give either \"T\" or \"T_list\", not both");
  if (j.contains("T")) config.T_list = {Integer(j["T"], "T")};
  if (j.contains("T_list")) {
    Require(j["T_list"].is_array() && !j["T_list"].empty(), "T_list must be a nonempty array");
    for (const Json& t : j["T_list"]) config.T_list.push_back(Integer(t, "T_list entries"));
  }
  for (long t : config.T_list) Require(t >= 1, "T values must be positive");
  if (j.contains("comparator")) config.comparator = ParseComparator(j["comparator"]);
  if (j.contains("output_dir")) {
    Require(j["output_dir"].is_string(), "output_dir must be a string");
    config.output_dir = j["output_dir"].get<std::string>();
  }
  config.snapshot = j.dump();
  return config;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return ParseExperimentConfig(text.str());
}

ControllerSpec ParseControllerSpec(const std::string& text) { return ParseController(Parse(text)); }

std::string DareReportJson(const LinearSystem& system, const RiccatiInfinite& ricc_inf) {
  const ProblemScales scales = ComputeProblemScales(system, ricc_inf.P);
  Json j;
  j["version"] = kVersion;
  j["P"] = MatrixJson(ricc_inf.P);
  j["K"] = MatrixJson(ricc_inf.K);
  j["Sigma"] = MatrixJson(ricc_inf.Sigma);
  j["Acl"] = MatrixJson(ricc_inf.Acl);
  j["kappa"] = ricc_inf.kappa;
  j["gamma"] = ricc_inf.gamma;
  j["psi_star"] = scales.psi_star;
  j["beta_star"] = scales.beta_star;
  j["gamma_star"] = scales.gamma_star_cap;
  j["residual"] = DareResidual(system, ricc_inf.P);
  return j.dump(2);
}

std::string RegretCsv(const std::vector<RegretRow>& rows) {
  std::string out = "t,J_alg,J_comparator,regret,comparator_kind\n";
  for (const RegretRow& r : rows) {
    out += std::to_string(r.t) + "," + Num(r.J_alg) + "," + Num(r.J_comparator) + "," + Num(r.regret) + "," +
           r.comparator_kind + "\n";
  }
  return out;
}

std::string CounterexampleCsv(const std::vector<CounterexampleReport>& reports) {
  std::string out = "T,lambda_regret,movement_cost,stationarization_gap\n";
  for (const CounterexampleReport& r : reports) {
    out += std::to_string(r.T) + "," + Num(r.lambda_regret) + "," + Num(r.movement_cost) + "," +
           Num(r.stationarization_gap) + "\n";
  }
  return out;
}

std::string RunMetadataJson(const ExperimentConfig& config, const ExperimentResult& result) {
  Json j;
  j["version"] = kVersion;
  j["command"] = "run";
  j["config"] = Json::parse(config.snapshot.empty() ? "{}" : config.snapshot);
  j["seed"] = config.seed;
  j["disturbance"] = config.disturbance.Name();
  j["controller"] = ToString(config.controller.kind);
  j["comparator_kind"] = ToString(config.comparator.kind);
  j["comparator_mode"] = ToString(config.comparator.mode);
  j["comparator_note"] =
      "prefix: controller and comparator rerun on w_{1:t} for each checkpoint t; "
      "fixed: one episode at max(T_list), both evaluated on cumulative prefix costs";
  j["baseline"] = "k_inf";
  Json checkpoints = Json::array();
  for (size_t i = 0; i < result.lookaheads.size(); ++i) {
    checkpoints.push_back({{"h", result.lookaheads[i]}, {"m", result.dap_lengths[i]}});
  }
  j["lookahead"] = checkpoints;
  Json rows = Json::array();
  for (const RegretRow& r : result.rows) {
    rows.push_back({{"t", r.t}, {"comparator_kind", r.comparator_kind}, {"J_comparator", r.J_comparator}});
  }
  j["comparator_optimum"] = rows;
  j["wall_seconds"] = result.wall_seconds;
  return j.dump(2);
}

std::string CounterexampleMetadataJson(const std::vector<CounterexampleReport>& reports,
                                       std::optional<double> epsilon) {
  Json j;
  j["version"] = kVersion;
  j["command"] = "counterexample";
  j["epsilon_override"] = epsilon ? Json(*epsilon) : Json(nullptr);
  Json runs = Json::array();
  for (const CounterexampleReport& r : reports) {
    runs.push_back({{"T", r.T},
                    {"mu", r.mu},
                    {"eta", r.eta},
                    {"epsilon", r.epsilon},
                    {"projected", r.projected},
                    {"constraint", r.projected ? "[-0.2, 0.2]" : "none"}});
  }
  j["runs"] = runs;
  return j.dump(2);
}

}  // namespace riccatitron
