#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "hlob/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hawkes limit order book simulator and scaling-limit solver"};
  app.require_subcommand(1);

  std::string config, out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> level;

  for (const char* name : {"simulate-micro", "solve-limit", "converge", "oracle-check", "resolvent"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "master seed (overrides HLOB_SEED and the config)");
    sub->add_option("--threads", threads, "worker threads (overrides HLOB_THREADS and the config)")
        ->check(CLI::Range(1u, 4096u));
    sub->add_option("--level", level, "micro refinement level")->check(CLI::NonNegativeNumber);
  }
  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest.json");
  rerun->add_option("--manifest", manifest, "manifest written by an earlier run")
      ->required()
      ->check(CLI::ExistingFile);
  rerun->add_option("--out", out, "output directory");
  rerun->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 4096u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hlob::kExitOk : hlob::kExitConfig;
  }

  auto* sub = app.get_subcommands().front();
  if (sub == rerun) return hlob::execute_manifest(manifest, out, threads);
  return hlob::execute(hlob::parse_command(sub->get_name()), config, out, {seed, threads, level});
}
