#include "riccatitron.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"
#include "riccatitron/config.hpp"

using namespace riccatitron;

struct rt_system {
  LinearSystem system;
};

struct rt_controller {
  std::unique_ptr<Riccatitron> policy;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
rt_status Guard(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return RT_OK;
  } catch (const ConfigError& e) {
    last_error = e.what();
    return RT_ERR_CONFIG;
  } catch (const NumericError& e) {
    last_error = e.what();
    return RT_ERR_NUMERIC;
  } catch (const ProtocolError& e) {
    last_error = e.what();
    return RT_ERR_PROTOCOL;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return RT_ERR_INTERNAL;
}

char* Duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void NotNull(const void* p, const char* name) {
  Require(p != nullptr, std::string(name) + " must not be NULL");
}

Matrix RowMajor(const double* data, int rows, int cols) {
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = data[r * cols + c];
  return M;
}

}  // namespace

extern "C" {

const char* rt_version(void) { return kVersion; }

const char* rt_last_error(void) { return last_error.c_str(); }

void rt_string_free(char* s) { std::free(s); }

rt_status rt_system_create(int dx, int du, const double* A, const double* B, const double* Rx, const double* Ru,
                           rt_system** out) {
  return Guard([&] {
    NotNull(out, "out");
    NotNull(A, "A");
    NotNull(B, "B");
    NotNull(Rx, "Rx");
    NotNull(Ru, "Ru");
    Require(dx >= 1 && du >= 1, "dimensions must be positive");
    auto handle = std::make_unique<rt_system>();
    handle->system = LinearSystem::Make(RowMajor(A, dx, dx), RowMajor(B, dx, du), RowMajor(Rx, dx, dx),
                                        RowMajor(Ru, du, du));
    *out = handle.release();
  });
}

rt_status rt_system_load(const char* config_path, rt_system** out) {
  return Guard([&] {
    NotNull(out, "out");
    NotNull(config_path, "config_path");
    auto handle = std::make_unique<rt_system>();
    handle->system = LoadExperimentConfig(config_path).system;
    *out = handle.release();
  });
}

void rt_system_destroy(rt_system* system) { delete system; }

rt_status rt_system_dims(const rt_system* system, int* dx, int* du) {
  return Guard([&] {
    NotNull(system, "system");
    if (dx != nullptr) *dx = system->system.dx();
    if (du != nullptr) *du = system->system.du();
  });
}

rt_status rt_dare_report(const rt_system* system, char** json_out) {
  return Guard([&] {
    NotNull(system, "system");
    NotNull(json_out, "json_out");
    const RiccatiInfinite ricc_inf = SolveInfiniteHorizon(system->system);
    *json_out = Duplicate(DareReportJson(system->system, ricc_inf));
  });
}

rt_status rt_controller_create(const rt_system* system, long T, const char* controller_json,
                               rt_controller** out) {
  return Guard([&] {
    NotNull(system, "system");
    NotNull(out, "out");
    const ControllerSpec spec = controller_json != nullptr ? ParseControllerSpec(controller_json) : ControllerSpec{};
    Require(spec.kind == ControllerKind::kRiccatitron, "rt_controller_create builds Riccatitron controllers only");
    const LinearSystem& sys = system->system;
    const RiccatiInfinite ricc_inf = SolveInfiniteHorizon(sys);
    const ProblemScales scales = ComputeProblemScales(sys, ricc_inf.P);
    RiccatitronConfig config = DefaultConfig(sys, scales, ricc_inf, spec.kappa0.value_or(ricc_inf.kappa),
                                             spec.gamma0.value_or(ricc_inf.gamma), T, spec.overrides);
    auto handle = std::make_unique<rt_controller>();
    handle->policy = std::make_unique<Riccatitron>(std::move(config));
    *out = handle.release();
  });
}

void rt_controller_destroy(rt_controller* controller) { delete controller; }

rt_status rt_controller_act(rt_controller* controller, const double* x, double* u_out) {
  return Guard([&] {
    NotNull(controller, "controller");
    NotNull(x, "x");
    NotNull(u_out, "u_out");
    const int dx = controller->policy->config().ricc_inf.system.dx();
    const Vector u = controller->policy->Act(Eigen::Map<const Vector>(x, dx));
    std::copy(u.data(), u.data() + u.size(), u_out);
  });
}

rt_status rt_controller_observe(rt_controller* controller, const double* w) {
  return Guard([&] {
    NotNull(controller, "controller");
    NotNull(w, "w");
    const int dx = controller->policy->config().ricc_inf.system.dx();
    controller->policy->Observe(Eigen::Map<const Vector>(w, dx));
  });
}

rt_status rt_controller_info(const rt_controller* controller, int* h, int* m, long* round) {
  return Guard([&] {
    NotNull(controller, "controller");
    const RiccatitronConfig& config = controller->policy->config();
    if (h != nullptr) *h = config.h;
    if (m != nullptr) *m = config.dap_set.m;
    if (round != nullptr) *round = controller->policy->round();
  });
}

rt_status rt_run_experiment(const char* config_path, const char* comparator_mode, char** result_json_out) {
  return Guard([&] {
    NotNull(config_path, "config_path");
    NotNull(result_json_out, "result_json_out");
    ExperimentConfig config = LoadExperimentConfig(config_path);
    Require(!config.T_list.empty(), "run needs \"T\" or \"T_list\" in the config");
    if (comparator_mode != nullptr) config.comparator.mode = ParseComparatorMode(comparator_mode);
    const ExperimentResult result =
        RegretExperiment(config.system, config.controller, config.disturbance, config.T_list, config.comparator);
    nlohmann::json j;
    j["output_dir"] = config.output_dir;
    j["regret_csv"] = RegretCsv(result.rows);
    j["baseline_csv"] = RegretCsv(result.baseline_rows);
    j["metadata"] = RunMetadataJson(config, result);
    *result_json_out = Duplicate(j.dump());
  });
}

rt_status rt_counterexample(const long* T_list, size_t count, const double* epsilon, int projected,
                            char** result_json_out) {
  return Guard([&] {
    NotNull(result_json_out, "result_json_out");
    Require(count > 0 && T_list != nullptr, "counterexample needs at least one T");
    const std::optional<double> eps = epsilon != nullptr ? std::optional<double>(*epsilon) : std::nullopt;
    std::vector<CounterexampleReport> reports;
    for (size_t i = 0; i < count; ++i) reports.push_back(CounterexampleExperiment(T_list[i], eps, projected != 0));
    nlohmann::json j;
    j["csv"] = CounterexampleCsv(reports);
    j["metadata"] = CounterexampleMetadataJson(reports, eps);
    *result_json_out = Duplicate(j.dump());
  });
}

}  // extern "C"
