#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "hlob/kernels.hpp"
#include "hlob/rng.hpp"

namespace hlob {

enum class Side { Ask = 0, Bid = 1 };

/// Active event types. Market orders move their own side's price away from
/// the spread; spread placements move it into the spread.
enum ActiveType { kAskMarket = 0, kAskSpread = 1, kBidMarket = 2, kBidSpread = 3 };
/// Passive event types: placements and cancellations on either side.
enum PassiveType { kAskPlace = 0, kAskCancel = 1, kBidPlace = 2, kBidCancel = 3 };

inline constexpr int side_of(int type) { return type / 2; }
const char* active_name(int type);
const char* passive_name(int type);
/// Parses "aM", "aL", "bM", "bL" (active) or "aL", "aC", "bL", "bC" (passive).
int parse_active(const std::string& s);
int parse_passive(const std::string& s);

struct PriceView {
  double ask = 0.0;
  double bid = 0.0;
  double spread() const { return ask - bid; }
  double own(Side s) const { return s == Side::Ask ? ask : bid; }
};

/// State-dependent rate multiplier.
///   constant:       value
///   spread:         min(cap, max(0, ask - bid))
///   price_squared:  value * min(p^2, cap^2), p the own-side price
struct RateFamily {
  enum class Kind { Constant, Spread, PriceSquared };
  Kind kind = Kind::Constant;
  double value = 0.0;
  double cap = std::numeric_limits<double>::infinity();

  static RateFamily constant(double v) { return {Kind::Constant, v, std::numeric_limits<double>::infinity()}; }
  static RateFamily spread(double cap) { return {Kind::Spread, 1.0, cap}; }
  static RateFamily price_squared(double scale, double cap) { return {Kind::PriceSquared, scale, cap}; }

  double operator()(const PriceView& p, Side s) const;
  double sup() const;
  double lipschitz() const;
  bool is_zero() const { return kind == Kind::Constant && value == 0.0; }
  /// True when the own-side price was clipped at the cap.
  bool capped(const PriceView& p, Side s) const;
  bool operator==(const RateFamily&) const = default;
};

/// Distribution nu of the size mark z >= 0.
///   dirac(z0)
///   exponential(rate): z ~ Exp(rate), rate > 4 for a finite fourth moment
///   lognormal(m, s):   e^z - 1 ~ LogNormal(m, s)
struct SizeMeasure {
  enum class Kind { Dirac, Exponential, LogNormal };
  Kind kind = Kind::Dirac;
  double p1 = 0.0;
  double p2 = 0.0;

  static SizeMeasure dirac(double z0) { return {Kind::Dirac, z0, 0.0}; }
  static SizeMeasure exponential(double rate) { return {Kind::Exponential, rate, 0.0}; }
  static SizeMeasure lognormal(double m, double s) { return {Kind::LogNormal, m, s}; }

  double alpha_place() const;    // nu(e^z - 1)
  double alpha_cancel() const;   // nu(e^{-z} - 1)
  double fourth_moment() const;  // nu(|e^z - 1|^4)
  double sample(Rng& rng) const;
  void validate() const;
  bool operator==(const SizeMeasure&) const = default;
};

/// Initial volume density as a function of distance from the initial best
/// price: base + sum of Gaussian bumps.
struct ProfileFn {
  double base = 0.0;
  std::vector<SpatialProfile> bumps;

  double operator()(double x) const;
  bool operator==(const ProfileFn&) const = default;
};

/// lambda_hat(S, x) = multiplier(S) * profile(x).
struct PassiveExogenous {
  RateFamily multiplier = RateFamily::constant(0.0);
  SpatialProfile profile;

  double operator()(const PriceView& p, Side s, double x) const { return multiplier(p, s) * profile(x); }
  bool operator==(const PassiveExogenous&) const = default;
};

struct SideModel {
  RateFamily rho = RateFamily::constant(0.0);
  RateFamily varrho = RateFamily::constant(0.0);
  RateFamily mu_hat = RateFamily::constant(0.0);
  RateFamily beta_hat = RateFamily::constant(0.0);
  std::array<PassiveExogenous, 2> lambda_hat;  // placement, cancellation
  std::array<SizeMeasure, 2> sizes;            // placement, cancellation
  bool operator==(const SideModel&) const = default;
};

/// The limit model: rate multipliers, exogenous densities, size measures and
/// the limit kernels. Micro models at every level are derived from it.
struct LimitModel {
  std::array<SideModel, 2> side;
  // Active targets (side I), active sources (type ij): phi_{I,ij}, theta_{I,ij}.
  std::array<std::array<SpaceTimeKernel, 4>, 2> phi;
  std::array<std::array<SpaceTimeKernel, 4>, 2> theta;
  // Active targets (side I), passive sources (type ik), source profile in y.
  std::array<std::array<SpaceTimeKernel, 4>, 2> Phi;
  std::array<std::array<SpaceTimeKernel, 4>, 2> Theta;
  // Passive targets (type IK), active sources (type ij), target profile in x.
  std::array<std::array<SpaceTimeKernel, 4>, 4> psi;
  // Passive targets (type IK), passive sources (type ik).
  std::array<std::array<SpaceTimeKernel, 4>, 4> Psi;

  double alpha_place(int side_index) const { return side[side_index].sizes[0].alpha_place(); }
  double alpha_cancel(int side_index) const { return side[side_index].sizes[1].alpha_cancel(); }

  /// Structural checks: size measures, nonnegative passive-target kernels,
  /// finite envelopes.
  void validate() const;
  bool operator==(const LimitModel&) const = default;
};

/// Declared regularity constants.
struct Bounds {
  double c0 = 0.0;
  double lipschitz = 0.0;
  bool operator==(const Bounds&) const = default;
};

/// Probe-set check of the boundedness, L^p and shift-Lipschitz conditions.
/// Returns human-readable warnings; an empty list means every probe passed.
std::vector<std::string> check_conditions(const LimitModel& model, const Bounds& bounds, double half_width,
                                          double horizon, const std::vector<PriceView>& probes);

/// Fraction of the exogenous passive mass on the real line that falls inside
/// [-half_width, half_width], minimized over the four passive types.
double passive_mass_coverage(const LimitModel& model, double half_width);

}  // namespace hlob
