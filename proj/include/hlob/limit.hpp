#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hlob/model.hpp"
#include "hlob/volterra.hpp"

namespace hlob {

/// Macroscopic state. Volume grids are in absolute price: va[j] sits at
/// x = pa0 + xi_j and vb[j] at x = pb0 - xi_j, xi_j the spatial grid nodes and
/// (pa0, pb0) the initial prices.
struct LimitState {
  double pa = 0.0;
  double pb = 0.0;
  std::vector<double> va;
  std::vector<double> vb;

  double spread() const { return pa - pb; }
  bool operator==(const LimitState&) const = default;
};

LimitState make_limit_state(const SpatialGrid& g, double pa, double pb, const ProfileFn& ask, const ProfileFn& bid);

/// Brownian increments (dB_a, dB_b) per step.
struct NoisePath {
  double dt = 0.0;
  std::vector<std::array<double, 2>> increments;

  static NoisePath generate(std::uint64_t seed, std::uint64_t replicate, std::size_t steps, double dt);
  static NoisePath zero(std::size_t steps, double dt);
  /// Sums consecutive groups of `factor` increments.
  NoisePath coarsen(std::size_t factor) const;
};

struct DriftDiffusion {
  std::array<double, 2> drift{};      // rho beta + varrho mu, before the bid sign
  std::array<double, 2> diffusion{};  // sqrt(2 rho mu)
  std::array<double, 2> rho{};
  std::array<double, 2> varrho{};
  int clamped = 0;                    // negative radicands
};

DriftDiffusion drift_diffusion(const LimitModel& model, const PriceView& prices, const std::array<double, 2>& mu,
                               const std::array<double, 2>& beta);

/// Test functions of the distance from each side's initial best price.
struct TestFunctions {
  std::vector<SpatialProfile> ask;
  std::vector<SpatialProfile> bid;
};

struct LimitOptions {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t cadence = 1;  // record every k-th step; the last step is always recorded
  bool store_fields = false;
  TestFunctions tests;
};

struct LimitRecord {
  std::size_t step = 0;
  double t = 0.0;
  double pa = 0.0;
  double pb = 0.0;
  std::array<double, 2> mu{};
  std::array<double, 2> beta{};
  std::array<double, 2> rho{};
  std::array<double, 2> h{};      // signed price drifts
  std::array<double, 2> sigma{};  // rho * mu, half the squared diffusion
  std::vector<double> vf_a, vf_b;    // <V_I, f>
  std::vector<double> eta_a, eta_b;  // d/dt <V_I, f>
};

struct LimitPath {
  std::vector<LimitRecord> records;
  std::vector<IntensityField> fields;  // when store_fields
  LimitState final_state;
  std::size_t steps = 0;
  std::size_t radicand_clamps = 0;
  std::size_t intensity_clamps = 0;
  std::size_t barrier_hits = 0;
  std::size_t spread_violations = 0;  // spread below -4 * diffusion * sqrt(dt)
  double min_spread = 0.0;
};

class LimitSolver {
 public:
  LimitSolver(LimitModel model, SpatialGrid grid, LimitState initial, LimitOptions opts);

  /// Computes intensities at the current state, records, and unless this is
  /// the final step advances prices by Euler-Maruyama and volumes by explicit
  /// Euler with the given increments.
  void step(const std::array<double, 2>& dB);
  LimitPath run(const NoisePath& noise);

  const LimitState& state() const { return state_; }
  const LimitPath& path() const { return path_; }

 private:
  double pair(const std::vector<double>& v, const SpatialProfile& f) const;
  void eta(const IntensityField& d, std::vector<double>& ea, std::vector<double>& eb) const;

  LimitModel model_;
  SpatialGrid grid_;
  LimitOptions opts_;
  VolterraStepper volterra_;
  LimitState state_;
  double pa0_ = 0.0;
  double pb0_ = 0.0;
  std::size_t total_steps_ = 0;
  std::size_t m_ = 0;
  std::array<double, 2> alpha_l_{};
  std::array<double, 2> alpha_c_{};
  LimitPath path_;
};

LimitPath solve_path(const LimitModel& model, const SpatialGrid& grid, const LimitState& initial,
                     const LimitOptions& opts, std::uint64_t seed, std::uint64_t replicate = 0);
LimitPath solve_path(const LimitModel& model, const SpatialGrid& grid, const LimitState& initial,
                     const LimitOptions& opts, const NoisePath& noise);

struct UniquenessReport {
  bool passed = true;
  std::vector<std::string> failures;
};

/// Checks 0 < rho_I(S) <= varrho_I(S) (p_a - p_b) for probe states whose
/// spread lies in (0, eps); probes give the bid price, spreads are sampled
/// at `spreads_per_probe` points.
UniquenessReport check_uniqueness_condition(const LimitModel& model, double eps, const std::vector<PriceView>& probes,
                                            int spreads_per_probe = 16);

}  // namespace hlob
