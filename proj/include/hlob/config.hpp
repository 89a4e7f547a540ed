#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlob/kernels.hpp"
#include "hlob/model.hpp"

namespace hlob {

inline constexpr int kSchemaVersion = 1;

/// Schema violations, each message prefixed with "line N: " when the
/// offending node has a position.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

/// Temporal factor of one kernel declaration. `custom` is an arbitrary sum of
/// c t^m e^{-kappa t} terms and must declare an envelope c e^{-kappa t}
/// dominating the absolute sum.
struct KernelTime {
  std::string family = "exponential";  // constant | exponential | gamma | custom
  double c = 0.0;
  double kappa = 0.0;
  std::vector<TemporalTerm> terms;
  std::optional<TemporalTerm> envelope;

  std::vector<TemporalTerm> expand() const;
  bool operator==(const KernelTime&) const = default;
};

/// kind: phi | theta (target side, active source), Phi | Theta (target side,
/// passive source), psi (passive target, active source), Psi (passive target,
/// passive source). Sides are "a"/"b", types "aM", "aL", "bM", "bL" for active
/// and "aL", "aC", "bL", "bC" for passive.
struct KernelDecl {
  std::string kind;
  std::string target;
  std::string source;
  KernelTime time;
  SpatialProfile target_profile;
  SpatialProfile source_profile;
  bool operator==(const KernelDecl&) const = default;
};

struct GridBlock {
  double delta_x = 0.1;
  double delta_v = 0.05;
  double half_width = 1.0;
  int nodes = 101;
  double dt = 1e-3;
  double horizon = 1.0;
  bool operator==(const GridBlock&) const = default;
};

struct InitialBlock {
  double ask = 1.2;
  double bid = 1.0;
  ProfileFn ask_profile{1.0, {}};
  ProfileFn bid_profile{1.0, {}};
  bool operator==(const InitialBlock&) const = default;
};

struct ExperimentBlock {
  int levels = 3;  // highest refinement level
  std::size_t replicates = 100;
  std::size_t limit_replicates = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int level = 0;
  std::size_t bootstrap = 200;
  double tolerance_factor = 2.0;
  std::vector<SpatialProfile> tests;
  bool operator==(const ExperimentBlock&) const = default;
};

struct OracleBlock {
  std::vector<std::string> checks;  // cir | spread | clustering | book | intensity
  double cir_x0 = 0.5, cir_a = 1.0, cir_b = 0.0, cir_c = 1.0;
  std::size_t cir_paths = 1000;
  std::size_t cir_steps = 1000;
  double sigma2 = 0.5;
  double phi_c = 1.0;
  double phi_kappa = 1.0;
  double price_cap = 2.0;
  double clustering_t = 1.0, clustering_eps = 0.05, clustering_lag = 0.1, clustering_dt = 2e-3;
  std::size_t clustering_replicates = 10000;
  bool operator==(const OracleBlock&) const = default;
};

struct ResolventBlock {
  std::vector<KernelTime> kernels;
  double dt = 1e-3;
  std::size_t steps = 1000;
  bool operator==(const ResolventBlock&) const = default;
};

struct OutputBlock {
  std::size_t cadence = 1;
  bool paths = true;
  bool operator==(const OutputBlock&) const = default;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string model = "limit";  // micro | limit | oracle | converge
  Bounds bounds;
  GridBlock grid;
  InitialBlock initial;
  std::array<SideModel, 2> sides;
  std::vector<KernelDecl> kernels;
  ExperimentBlock experiment;
  OracleBlock oracle;
  ResolventBlock resolvent;
  OutputBlock output;

  LimitModel limit_model() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates YAML text. Throws ConfigError listing every problem.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

}  // namespace hlob
