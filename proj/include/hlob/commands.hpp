#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "hlob/config.hpp"
#include "hlob/harness.hpp"
#include "hlob/io.hpp"

namespace hlob {

enum class Command { SimulateMicro, SolveLimit, Converge, OracleCheck, Resolvent };

Command parse_command(const std::string& name);
std::string command_name(Command c);

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> level;
};

/// HLOB_SEED and HLOB_THREADS; malformed values throw std::invalid_argument.
Overrides env_overrides();
/// Flags win over the environment, the environment over the config file.
void apply_overrides(RunConfig& cfg, const Overrides& flags, const Overrides& env);

/// The convergence experiment described by the grid, initial, experiment and
/// output blocks.
ExperimentPlan plan_from_config(const RunConfig& cfg);

struct CommandResult {
  nlohmann::json report;
  SeedManifest manifest;
  bool pass = true;
};

/// Runs one command and writes its CSV tables, report.json and manifest.json
/// into out_dir. Throws on failure.
CommandResult run_command(Command c, const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Loads the config, applies overrides and runs. Failures become a JSON error
/// report on stderr and in out_dir/error.json; returns the exit status.
int execute(Command c, const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const Overrides& flags);

/// Reruns the command recorded in a manifest with its embedded configuration
/// and seed. Only the thread count may change.
int execute_manifest(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                     std::optional<unsigned> threads);

}  // namespace hlob
