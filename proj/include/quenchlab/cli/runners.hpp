#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenchlab/cli/config.hpp"

namespace quenchlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSelftestFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitIo = 4;

struct RunOutput {
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::string> warnings;
  nlohmann::json summary = nlohmann::json::object();
  int exit_code = kExitOk;
};

RunOutput run_polymer(const PolymerConfig& config, int jobs);
RunOutput run_msk_sweep(const MskConfig& config, int jobs);
RunOutput run_pspm(const PspmConfig& config, int jobs);
RunOutput run_passage(const PassageConfig& config, int jobs);
RunOutput run_fluct(const FluctConfig& config, int jobs);
RunOutput run_metric_selftest(const SelftestConfig& config, int jobs);

// Normalizes `raw` against the subcommand schema, applies QUENCHLAB_SEED,
// runs, and writes manifest.json next to the outputs. Errors are reported on
// stderr and mapped to exit codes: 2 config, 3 non-convergence, 4 I/O.
int execute(const std::string& subcommand, const nlohmann::json& raw, int jobs);

}  // namespace quenchlab::cli
