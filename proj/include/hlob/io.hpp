#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlob/hawkes.hpp"

namespace hlob {

inline constexpr const char* kArtifactVersion = "hlob-artifacts/1";

/// Column names carry their unit in brackets, e.g. "t[time]"; dimensionless
/// columns have no bracket.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
};

/// Shortest-safe round-trip formatting (%.17g); integers print without a
/// fraction, non-finite values as nan, inf, -inf.
std::string format_number(double v);
std::string to_csv(const CsvTable& t);
void write_csv(const std::filesystem::path& path, const CsvTable& t);
CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Appends one replicate's events as rows (replicate, t, label, x, z).
CsvTable events_table();
void append_events(CsvTable& t, std::uint64_t replicate, const EventStream& s);

/// One block of replicates drawn from `seed`; replicate r of the block uses
/// the stream keys derive_key(seed, r, role) for every role.
struct StreamGroup {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t replicates = 0;
};

struct SeedManifest {
  std::string version = kArtifactVersion;
  std::string command;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  int level = 0;
  std::string config;  // serialized effective configuration
  std::vector<StreamGroup> groups;

  nlohmann::json to_json() const;
  /// Throws std::invalid_argument on a version mismatch or when a listed key
  /// differs from its derivation.
  static SeedManifest from_json(const nlohmann::json& j);
};

}  // namespace hlob
