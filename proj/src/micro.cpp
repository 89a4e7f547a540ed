#include "hlob/micro.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hlob {

namespace {

// Weight of a source event in a target intensity.
double source_weight(bool target_passive, bool source_passive, double dx, double dv) {
  if (!target_passive) return source_passive ? dv / (dx * dx) : 1.0;
  return source_passive ? 1.0 : dx * dx / dv;
}

struct EngineTerm {
  int target = 0;  // 0..3 active, 4..7 passive
  TemporalTerm time;
  SpatialProfile target_profile;
  SpatialProfile source_profile;
  double weight = 1.0;
  double target_mass = 1.0;
  ErlangState state;
};

// Markov representation of all kernel sums in the micro intensities.
class Engine {
 public:
  explicit Engine(const MicroParams& p) {
    const double L = p.half_width;
    auto add = [&](int target, int source, const SpaceTimeKernel& k) {
      for (const auto& kt : k.terms) {
        if (kt.time.c == 0.0) continue;
        EngineTerm t;
        t.target = target;
        t.time = kt.time;
        t.target_profile = kt.target;
        t.source_profile = kt.source;
        t.weight = source_weight(target >= 4, source >= 4, p.delta_x, p.delta_v);
        t.target_mass = target >= 4 ? kt.target.mass(-L, L) : 1.0;
        by_source_[static_cast<std::size_t>(source)].push_back(terms_.size());
        by_target_[static_cast<std::size_t>(target)].push_back(terms_.size());
        terms_.push_back(t);
      }
    };
    for (int J = 0; J < 4; ++J) {
      for (int s = 0; s < 4; ++s) {
        add(J, s, p.phi[static_cast<std::size_t>(J)][static_cast<std::size_t>(s)]);
        add(J, 4 + s, p.Phi[static_cast<std::size_t>(J)][static_cast<std::size_t>(s)]);
      }
    }
    for (int K = 0; K < 4; ++K) {
      for (int s = 0; s < 4; ++s) {
        add(4 + K, s, p.psi(K, s));
        add(4 + K, 4 + s, p.Psi(K, s));
      }
    }
  }

  void decay(double h) {
    for (auto& t : terms_) t.state.decay(h, t.time.kappa);
  }

  void on_event(int source, double y) {
    for (std::size_t i : by_source_[static_cast<std::size_t>(source)]) {
      auto& t = terms_[i];
      t.state.jump(t.weight * t.time.c * t.source_profile(y));
    }
  }

  // Kernel part of an active intensity, or the kernel mass of a passive one.
  double value(int target) const {
    double s = 0.0;
    for (std::size_t i : by_target_[static_cast<std::size_t>(target)]) {
      const auto& t = terms_[i];
      s += t.state.value(t.time.power) * t.target_mass;
    }
    return s;
  }

  double bound(int target) const {
    double s = 0.0;
    for (std::size_t i : by_target_[static_cast<std::size_t>(target)]) {
      const auto& t = terms_[i];
      s += t.state.sup_ahead(t.time.power, t.time.kappa) * t.target_mass;
    }
    return s;
  }

  const std::vector<std::size_t>& terms_of(int target) const { return by_target_[static_cast<std::size_t>(target)]; }
  const EngineTerm& term(std::size_t i) const { return terms_[i]; }

 private:
  std::vector<EngineTerm> terms_;
  std::array<std::vector<std::size_t>, 8> by_source_;
  std::array<std::vector<std::size_t>, 8> by_target_;
};

double exo_passive_mass(const MicroParams& p, int K, const PriceView& prices) {
  const auto& lh = p.limit.side[static_cast<std::size_t>(side_of(K))].lambda_hat[static_cast<std::size_t>(K % 2)];
  const double m = lh.multiplier(prices, static_cast<Side>(side_of(K)));
  if (m == 0.0) return 0.0;
  return m * lh.profile.mass(-p.half_width, p.half_width) / p.delta_v;
}

void record_snapshots(const BookState& state, double upto, const std::vector<double>& times, std::size_t& next,
                      std::vector<BookState>& out) {
  while (next < times.size() && times[next] < upto) {
    out.push_back(state);
    ++next;
  }
}

}  // namespace

long TickGrid::tick_of(double x) const { return static_cast<long>(std::floor(x / delta_x)); }

long TickGrid::exact_tick(double price) const {
  const double r = price / delta_x;
  const long j = std::lround(r);
  if (std::abs(static_cast<double>(j) * delta_x - price) > 1e-9 * std::max(1.0, std::abs(price)))
    throw std::invalid_argument("price is not an integer multiple of the tick size");
  return j;
}

VolumeProfile::VolumeProfile(long origin, int dir, double delta_x, ProfileFn init, double window)
    : origin_(origin), dir_(dir), delta_x_(delta_x), init_(std::move(init)) {
  if (dir != 1 && dir != -1) throw std::invalid_argument("VolumeProfile: dir must be +1 or -1");
  const long half = static_cast<long>(std::ceil(window / delta_x)) + 1;
  first_ = origin - half;
  values_.resize(static_cast<std::size_t>(2 * half + 1));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] = initial(first_ + static_cast<long>(i));
    if (values_[i] < 0.0) throw std::invalid_argument("VolumeProfile: initial density must be nonnegative");
  }
}

double VolumeProfile::value(long j) const {
  if (j >= first_ && j < first_ + static_cast<long>(values_.size())) return values_[static_cast<std::size_t>(j - first_)];
  return initial(j);
}

double& VolumeProfile::at(long j) {
  if (j < first_) {
    std::vector<double> front(static_cast<std::size_t>(first_ - j));
    for (std::size_t i = 0; i < front.size(); ++i) front[i] = initial(j + static_cast<long>(i));
    values_.insert(values_.begin(), front.begin(), front.end());
    first_ = j;
  }
  const long end = first_ + static_cast<long>(values_.size());
  if (j >= end) {
    for (long k = end; k <= j; ++k) values_.push_back(initial(k));
  }
  return values_[static_cast<std::size_t>(j - first_)];
}

double VolumeProfile::pair(const std::function<double(double)>& f, double lo, double hi) const {
  // Ticks whose midpoint distance lies in [lo, hi].
  const long dlo = static_cast<long>(std::ceil(lo / delta_x_ - 0.5));
  const long dhi = static_cast<long>(std::floor(hi / delta_x_ - 0.5));
  double s = 0.0;
  for (long d = dlo; d <= dhi; ++d) {
    const long j = origin_ + dir_ * d;
    s += value(j) * f(distance_mid(j));
  }
  return s * delta_x_;
}

double VolumeProfile::lp_norm(double p) const {
  double s = 0.0;
  for (double v : values_) s += std::pow(std::abs(v), p);
  return std::pow(s * delta_x_, 1.0 / p);
}

double VolumeProfile::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double MicroParams::rho(int type, const PriceView& p) const {
  const int I = side_of(type);
  const Side s = static_cast<Side>(I);
  const auto& sm = limit.side[static_cast<std::size_t>(I)];
  double spread_rate = 0.0;
  if (sm.rho.kind == RateFamily::Kind::Spread) {
    spread_rate = std::min(sm.rho.cap, std::max(0.0, p.spread() - delta_x));
  } else {
    spread_rate = p.spread() >= delta_x * (1.0 - 1e-9) ? sm.rho(p, s) : 0.0;
  }
  if (type % 2 == 1) return spread_rate;
  return std::max(0.0, spread_rate + delta_x * sm.varrho(p, s));
}

double MicroParams::mu_hat(int type, const PriceView& p) const {
  const int I = side_of(type);
  const Side s = static_cast<Side>(I);
  const auto& sm = limit.side[static_cast<std::size_t>(I)];
  const double sign = type % 2 == 0 ? 0.5 : -0.5;
  return sm.mu_hat(p, s) + sign * delta_x * sm.beta_hat(p, s);
}

void MicroParams::validate() const {
  if (!(delta_x > 0.0) || !(delta_v > 0.0)) throw std::invalid_argument("delta_x and delta_v must be positive");
  if (delta_v > delta_x)
    throw std::invalid_argument(
        "delta_v must not exceed delta_x: the cancellation multiplier 1 + (delta_v/delta_x)(e^{-z} - 1) "
        "must stay in [0, 1] so that volumes remain nonnegative");
  if (!(half_width > 0.0)) throw std::invalid_argument("half_width must be positive");
  limit.validate();
}

MicroParams build_micro(const LimitModel& model, double delta_x0, double delta_v0, int level, double half_width) {
  if (level < 0) throw std::invalid_argument("refinement level must be >= 0");
  MicroParams p;
  p.level = level;
  p.delta_x0 = delta_x0;
  p.delta_v0 = delta_v0;
  p.delta_x = std::ldexp(delta_x0, -level);
  p.delta_v = std::ldexp(delta_v0, -2 * level);
  p.half_width = half_width;
  p.limit = model;
  p.validate();
  for (int J = 0; J < 4; ++J) {
    const auto I = static_cast<std::size_t>(side_of(J));
    const double split = (J % 2 == 0 ? 0.5 : -0.5) * p.delta_x;
    for (std::size_t s = 0; s < 4; ++s) {
      p.phi[static_cast<std::size_t>(J)][s] = model.phi[I][s] + model.theta[I][s].scaled(split);
      p.Phi[static_cast<std::size_t>(J)][s] = model.Phi[I][s] + model.Theta[I][s].scaled(split);
    }
  }
  return p;
}

MicroParams rescaled_sequence(const MicroParams& base, int k) {
  if (k < 0) throw std::invalid_argument("refinement level must be >= 0");
  return build_micro(base.limit, base.delta_x0, base.delta_v0, base.level + k, base.half_width);
}

BookState make_initial_book(const MicroParams& params, double ask_price, double bid_price, const ProfileFn& ask_init,
                            const ProfileFn& bid_init) {
  const TickGrid g = params.grid();
  BookState s;
  s.ask = g.exact_tick(ask_price);
  s.bid = g.exact_tick(bid_price);
  if (s.ask < s.bid) throw std::invalid_argument("initial ask price is below the bid price");
  s.ask_profile = VolumeProfile(s.ask, 1, params.delta_x, ask_init, params.half_width + params.delta_x);
  s.bid_profile = VolumeProfile(s.bid, -1, params.delta_x, bid_init, params.half_width + params.delta_x);
  return s;
}

double active_intensity(const MicroParams& params, const std::vector<Event>& history, const PriceView& prices,
                        double t, int type) {
  const double dx = params.delta_x, dv = params.delta_v;
  double v = params.mu_hat(type, prices) / (dx * dx);
  const auto J = static_cast<std::size_t>(type);
  for (const auto& e : history) {
    if (e.t >= t) throw std::invalid_argument("active_intensity: history contains an event at or after t");
    const double lag = t - e.t;
    if (is_passive_label(e.u.label)) {
      v += dv / (dx * dx) * params.Phi[J][static_cast<std::size_t>(e.u.label - 4)](lag, 0.0, e.u.x);
    } else {
      v += params.phi[J][static_cast<std::size_t>(e.u.label)](lag);
    }
  }
  return std::max(0.0, v);
}

double passive_intensity(const MicroParams& params, const std::vector<Event>& history, const PriceView& prices,
                         double t, int type, double x) {
  const double dx = params.delta_x, dv = params.delta_v;
  const auto& lh = params.limit.side[static_cast<std::size_t>(side_of(type))].lambda_hat[static_cast<std::size_t>(type % 2)];
  double v = lh(prices, static_cast<Side>(side_of(type)), x) / dv;
  for (const auto& e : history) {
    if (e.t >= t) throw std::invalid_argument("passive_intensity: history contains an event at or after t");
    const double lag = t - e.t;
    if (is_passive_label(e.u.label)) {
      v += params.Psi(type, e.u.label - 4)(lag, x, e.u.x);
    } else {
      v += dx * dx / dv * params.psi(type, e.u.label)(lag, x, 0.0);
    }
  }
  return std::max(0.0, v);
}

void apply_active_inplace(BookState& state, int type) {
  switch (type) {
    case kAskMarket:
      ++state.ask;
      break;
    case kAskSpread:
      --state.ask;
      break;
    case kBidMarket:
      --state.bid;
      break;
    case kBidSpread:
      ++state.bid;
      break;
    default:
      throw std::invalid_argument("apply_active: unknown active type");
  }
  if (state.ask < state.bid)
    throw std::logic_error("non-crossing violation: ask below bid after an active event (misconfigured rho)");
}

void apply_passive_inplace(BookState& state, int type, double y, double z, const MicroParams& params) {
  if (!(z >= 0.0)) throw std::invalid_argument("apply_passive: size mark must be nonnegative");
  const long k = static_cast<long>(std::floor(y / params.delta_x));
  const double r = params.delta_v / params.delta_x;
  const bool ask = side_of(type) == 0;
  double& v = ask ? state.ask_profile.at(state.ask + k) : state.bid_profile.at(state.bid - k);
  if (type % 2 == 0) {
    v += r * std::expm1(z);
  } else {
    v *= 1.0 + r * std::expm1(-z);
  }
}

BookState apply_active(const BookState& state, int type) {
  BookState s = state;
  apply_active_inplace(s, type);
  return s;
}

BookState apply_passive(const BookState& state, int type, double y, double z, const MicroParams& params) {
  BookState s = state;
  apply_passive_inplace(s, type, y, z, params);
  return s;
}

MicroRun simulate_book(const MicroParams& params, const BookState& initial, double horizon, std::uint64_t seed,
                       std::uint64_t replicate, const MicroOptions& opts) {
  params.validate();
  Rng ev_rng(seed, replicate, StreamRole::Events);
  Rng mark_rng(seed, replicate, StreamRole::Marks);
  Rng size_rng(seed, replicate, StreamRole::Sizes);
  const double dx = params.delta_x, dv = params.delta_v, L = params.half_width;
  const double inv_dx2 = 1.0 / (dx * dx);

  Engine engine(params);
  MicroRun run;
  run.events.horizon = horizon;
  BookState state = initial;
  run.min_spread_ticks = state.ask - state.bid;
  std::size_t next_sample = 0;
  double J = 1.0;
  std::array<double, 8> bound{}, actual{};

  auto d_norm_and_beta = [&](const PriceView& pv, std::array<double, 2>& beta) {
    std::array<double, 4> mu{};
    double norm = 0.0;
    for (int a = 0; a < 4; ++a) {
      mu[static_cast<std::size_t>(a)] = std::max(0.0, params.mu_hat(a, pv) * inv_dx2 + engine.value(a));
      norm += dx * dx * mu[static_cast<std::size_t>(a)];
    }
    for (int K = 0; K < 4; ++K) norm += dv * (exo_passive_mass(params, K, pv) + engine.value(4 + K));
    beta[0] = dx * (mu[0] - mu[1]);
    beta[1] = dx * (mu[2] - mu[3]);
    return norm;
  };

  {
    MicroRecord r;
    r.ask = state.ask;
    r.bid = state.bid;
    r.d_norm = d_norm_and_beta(state.prices(dx), r.beta);
    run.sup_d_norm = r.d_norm;
    if (opts.record_path) run.path.push_back(r);
  }

  double t = 0.0;
  while (true) {
    const PriceView pv = state.prices(dx);
    std::array<double, 4> rho{}, exo_active{};
    double total = 0.0;
    for (int a = 0; a < 4; ++a) {
      const auto i = static_cast<std::size_t>(a);
      rho[i] = params.rho(a, pv);
      exo_active[i] = params.mu_hat(a, pv) * inv_dx2;
      bound[i] = rho[i] == 0.0 ? 0.0 : rho[i] * std::max(0.0, exo_active[i] + engine.bound(a));
      total += bound[i];
    }
    std::array<double, 4> exo_passive{};
    for (int K = 0; K < 4; ++K) {
      const auto i = static_cast<std::size_t>(K);
      exo_passive[i] = exo_passive_mass(params, K, pv);
      bound[4 + i] = exo_passive[i] + engine.bound(4 + K);
      total += bound[4 + i];
    }
    if (!(total > 0.0)) break;
    const double dt = ev_rng.exponential(total);
    if (t + dt > horizon) break;
    t += dt;
    engine.decay(dt);
    ++run.candidates;

    double u = ev_rng.uniform() * total;
    int type = 7;
    for (int k = 0; k < 8; ++k) {
      if (u < bound[static_cast<std::size_t>(k)]) {
        type = k;
        break;
      }
      u -= bound[static_cast<std::size_t>(k)];
    }
    const auto ti = static_cast<std::size_t>(type);
    if (type < 4) {
      const double raw = exo_active[ti] + engine.value(type);
      if (raw < 0.0) ++run.clamped;
      actual[ti] = rho[ti] * std::max(0.0, raw);
    } else {
      actual[ti] = exo_passive[ti - 4] + engine.value(type);
    }
    if (actual[ti] > bound[ti] * (1.0 + 1e-9) + 1e-300)
      throw std::logic_error("simulate_book: intensity exceeds the thinning majorant");
    if (ev_rng.uniform() * bound[ti] > actual[ti]) continue;

    record_snapshots(state, t, opts.sample_times, next_sample, run.snapshots);

    MicroRecord rec;
    rec.d_norm = d_norm_and_beta(pv, rec.beta);
    run.sup_d_norm = std::max(run.sup_d_norm, rec.d_norm);

    Event e;
    e.t = t;
    e.u.label = type;
    if (type < 4) {
      apply_active_inplace(state, type);
      J += dx * dx;
      engine.on_event(type, 0.0);
    } else {
      const int K = type - 4;
      // Composition sampling of the location: exogenous profile or one kernel term.
      const auto& lh = params.limit.side[static_cast<std::size_t>(side_of(K))].lambda_hat[static_cast<std::size_t>(K % 2)];
      double w = mark_rng.uniform() * actual[ti];
      const SpatialProfile* prof = &lh.profile;
      if (w >= exo_passive[static_cast<std::size_t>(K)]) {
        w -= exo_passive[static_cast<std::size_t>(K)];
        for (std::size_t idx : engine.terms_of(type)) {
          const auto& term = engine.term(idx);
          const double m = term.state.value(term.time.power) * term.target_mass;
          prof = &term.target_profile;
          if (w < m) break;
          w -= m;
        }
      }
      e.u.x = prof->sample(-L, L, mark_rng.uniform());
      const auto& nu = params.limit.side[static_cast<std::size_t>(side_of(K))].sizes[static_cast<std::size_t>(K % 2)];
      e.z = nu.sample(size_rng);
      apply_passive_inplace(state, K, e.u.x, e.z, params);
      J += dv;
      engine.on_event(type, e.u.x);
    }
    run.min_spread_ticks = std::min(run.min_spread_ticks, state.ask - state.bid);
    if (opts.record_events) run.events.events.push_back(e);
    if (opts.record_path) {
      rec.t = t;
      rec.label = type;
      rec.ask = state.ask;
      rec.bid = state.bid;
      rec.J = J;
      run.path.push_back(rec);
    }
  }
  record_snapshots(state, std::numeric_limits<double>::infinity(), opts.sample_times, next_sample, run.snapshots);
  run.J_final = J;
  run.final_state = std::move(state);
  return run;
}

BookState replay(const MicroParams& params, const BookState& initial, const EventStream& events,
                 std::vector<MicroRecord>* path) {
  BookState s = initial;
  double J = 1.0;
  for (const auto& e : events.events) {
    if (is_passive_label(e.u.label)) {
      apply_passive_inplace(s, e.u.label - 4, e.u.x, e.z, params);
      J += params.delta_v;
    } else {
      apply_active_inplace(s, e.u.label);
      J += params.delta_x * params.delta_x;
    }
    if (path) {
      MicroRecord r;
      r.t = e.t;
      r.label = e.u.label;
      r.ask = s.ask;
      r.bid = s.bid;
      r.J = J;
      path->push_back(r);
    }
  }
  return s;
}

}  // namespace hlob
