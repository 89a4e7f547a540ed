#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "hlob/hawkes.hpp"
#include "hlob/kernels.hpp"
#include "hlob/model.hpp"

namespace hlob {

/// Event labels used in micro event streams: 0..3 are the active types,
/// 4..7 the passive types.
inline constexpr int passive_label(int passive_type) { return 4 + passive_type; }
inline constexpr bool is_passive_label(int label) { return label >= 4; }

struct TickGrid {
  double delta_x = 0.0;
  double half_width = 0.0;

  /// Index j with x in [x_j, x_{j+1}), x_j = j * delta_x.
  long tick_of(double x) const;
  double price(long j) const { return static_cast<double>(j) * delta_x; }
  /// Converts a price that must lie on the grid; throws otherwise.
  long exact_tick(double price) const;
};

/// Per-tick volume densities in absolute tick coordinates. Ticks are
/// materialized lazily from the initial profile, which is a function of the
/// distance from the initial best price: tick j sits at distance
/// (dir * (j - origin) + 1/2) * delta_x, dir = +1 for the ask side and -1
/// for the bid side.
class VolumeProfile {
 public:
  VolumeProfile() = default;
  VolumeProfile(long origin, int dir, double delta_x, ProfileFn init, double window);

  double value(long j) const;
  double& at(long j);
  double distance_mid(long j) const {
    return (static_cast<double>(dir_) * static_cast<double>(j - origin_) + 0.5) * delta_x_;
  }
  /// Sum over ticks with midpoint distance in [lo, hi] of V_j f(mid) delta_x.
  double pair(const std::function<double(double)>& f, double lo, double hi) const;
  /// L^p norm over the materialized ticks.
  double lp_norm(double p) const;
  double min_value() const;

  long origin() const { return origin_; }
  int dir() const { return dir_; }
  long first_tick() const { return first_; }
  const std::vector<double>& values() const { return values_; }
  bool operator==(const VolumeProfile& o) const {
    return origin_ == o.origin_ && dir_ == o.dir_ && first_ == o.first_ && values_ == o.values_;
  }

 private:
  double initial(long j) const { return init_(distance_mid(j)); }
  long origin_ = 0;
  int dir_ = 1;
  double delta_x_ = 1.0;
  ProfileFn init_;
  long first_ = 0;
  std::vector<double> values_;
};

struct BookState {
  long ask = 0;  // best ask tick
  long bid = 0;  // best bid tick
  VolumeProfile ask_profile;
  VolumeProfile bid_profile;

  PriceView prices(double delta_x) const {
    return {static_cast<double>(ask) * delta_x, static_cast<double>(bid) * delta_x};
  }
  bool operator==(const BookState&) const = default;
};

/// The level-n microscopic model derived from a limit model.
struct MicroParams {
  int level = 0;
  double delta_x0 = 0.0;
  double delta_v0 = 0.0;
  double delta_x = 0.0;
  double delta_v = 0.0;
  double half_width = 0.0;
  LimitModel limit;
  std::array<std::array<SpaceTimeKernel, 4>, 4> phi;  // [target active][source active]
  std::array<std::array<SpaceTimeKernel, 4>, 4> Phi;  // [target active][source passive]

  double rho(int type, const PriceView& p) const;
  /// Exogenous active density mu_hat^(n), before the delta_x^-2 prefactor.
  double mu_hat(int type, const PriceView& p) const;
  const SpaceTimeKernel& psi(int target, int source) const {
    return limit.psi[static_cast<std::size_t>(target)][static_cast<std::size_t>(source)];
  }
  const SpaceTimeKernel& Psi(int target, int source) const {
    return limit.Psi[static_cast<std::size_t>(target)][static_cast<std::size_t>(source)];
  }
  TickGrid grid() const { return {delta_x, half_width}; }
  void validate() const;
};

/// Level scales delta_x0 * 2^-level and delta_v0 * 4^-level. Spread placement
/// multipliers vanish below one tick of spread; market and placement
/// intensities and kernels are split around the limit by +/- delta_x / 2
/// times the declared differences.
MicroParams build_micro(const LimitModel& model, double delta_x0, double delta_v0, int level, double half_width);
MicroParams rescaled_sequence(const MicroParams& base, int k);

BookState make_initial_book(const MicroParams& params, double ask_price, double bid_price, const ProfileFn& ask_init,
                            const ProfileFn& bid_init);

/// Direct-summation intensities over an event history. `prices` is the state
/// just before t.
double active_intensity(const MicroParams& params, const std::vector<Event>& history, const PriceView& prices,
                        double t, int type);
double passive_intensity(const MicroParams& params, const std::vector<Event>& history, const PriceView& prices,
                         double t, int type, double x);

BookState apply_active(const BookState& state, int type);
BookState apply_passive(const BookState& state, int type, double y, double z, const MicroParams& params);
void apply_active_inplace(BookState& state, int type);
void apply_passive_inplace(BookState& state, int type, double y, double z, const MicroParams& params);

struct MicroRecord {
  double t = 0.0;
  int label = -1;
  long ask = 0;
  long bid = 0;
  double J = 1.0;
  std::array<double, 2> beta{};
  double d_norm = 0.0;  // D^1_1 norm of the rescaled intensity vector
};

struct MicroOptions {
  std::vector<double> sample_times;
  bool record_path = true;
  bool record_events = true;
};

struct MicroRun {
  EventStream events;
  std::vector<MicroRecord> path;
  std::vector<BookState> snapshots;  // one per sample time
  BookState final_state;
  double J_final = 1.0;
  double sup_d_norm = 0.0;
  long min_spread_ticks = 0;
  std::size_t candidates = 0;
  std::size_t clamped = 0;  // negative intensities clamped to zero
};

MicroRun simulate_book(const MicroParams& params, const BookState& initial, double horizon, std::uint64_t seed,
                       std::uint64_t replicate = 0, const MicroOptions& opts = {});

/// Replays an event stream through the pure update functions.
BookState replay(const MicroParams& params, const BookState& initial, const EventStream& events,
                 std::vector<MicroRecord>* path = nullptr);

}  // namespace hlob
