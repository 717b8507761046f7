#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riccatitron/harness.hpp"

namespace riccatitron {

inline constexpr const char* kVersion = "0.1.0";

/// Parsed experiment file. Only "system" is mandatory; `run` additionally
/// needs T or T_list.
struct ExperimentConfig {
  LinearSystem system;
  DisturbanceGen disturbance;
  ControllerSpec controller;
  std::vector<long> T_list;
  ComparatorSpec comparator;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  /// Canonical JSON of the parsed config, embedded in metadata.
  std::string snapshot;
};

/// Parses the JSON config text. Unknown keys, malformed JSON and invalid
/// systems all raise ConfigError.
ExperimentConfig ParseExperimentConfig(const std::string& text);
ExperimentConfig LoadExperimentConfig(const std::string& path);

/// Parses a standalone controller object (same keys as config "controller").
ControllerSpec ParseControllerSpec(const std::string& text);

ComparatorMode ParseComparatorMode(const std::string& name);

/// P∞, K∞, Σ∞, κ∞, γ∞, Ψ*, β*, Γ* and the DARE residual as JSON.
std::string DareReportJson(const LinearSystem& system, const RiccatiInfinite& ricc_inf);

std::string RegretCsv(const std::vector<RegretRow>& rows);
std::string CounterexampleCsv(const std::vector<CounterexampleReport>& reports);

std::string RunMetadataJson(const ExperimentConfig& config, const ExperimentResult& result);
std::string CounterexampleMetadataJson(const std::vector<CounterexampleReport>& reports,
                                       std::optional<double> epsilon);

}  // namespace riccatitron
