#include <gtest/gtest.h>

#include <cmath>

#include "hlob/hawkes.hpp"
#include "hlob/micro.hpp"
#include "hlob/stats.hpp"

using namespace hlob;

namespace {

SpaceTimeKernel exp_kernel(double c, double kappa, int power = 0, SpatialProfile target = SpatialProfile::one(),
                           SpatialProfile source = SpatialProfile::one()) {
  SpaceTimeKernel k;
  k.terms.push_back({{c, power, kappa}, target, source});
  return k;
}

ProfileFn flat(double v) { return ProfileFn{v, {}}; }

MicroParams flat_params(const LimitModel& m, double dx = 0.1, double dv = 0.05, double L = 2.0) {
  return build_micro(m, dx, dv, 0, L);
}

// A symmetric book driven by spread-dependent placements, with self- and
// cross-excitation on both sides.
LimitModel hawkes_book() {
  LimitModel m;
  for (int I = 0; I < 2; ++I) {
    auto& s = m.side[static_cast<std::size_t>(I)];
    s.rho = RateFamily::spread(1.0);
    s.varrho = RateFamily::constant(1.0);
    s.mu_hat = RateFamily::constant(0.02);
    s.lambda_hat[0] = {RateFamily::constant(1.0), SpatialProfile::gaussian(1.0, 0.3, 0.4)};
    s.lambda_hat[1] = {RateFamily::constant(0.5), SpatialProfile::gaussian(1.0, 0.2, 0.5)};
    s.sizes[0] = SizeMeasure::exponential(6.0);
    s.sizes[1] = SizeMeasure::dirac(0.7);
    for (int j = 0; j < 4; ++j) m.phi[static_cast<std::size_t>(I)][static_cast<std::size_t>(j)] = exp_kernel(0.2, 3.0);
    m.theta[static_cast<std::size_t>(I)][static_cast<std::size_t>(2 * I)] = exp_kernel(0.5, 3.0);
    m.Phi[static_cast<std::size_t>(I)][static_cast<std::size_t>(2 * I)] =
        exp_kernel(0.3, 2.0, 1, SpatialProfile::one(), SpatialProfile::gaussian(1.0, 0.0, 0.5));
  }
  for (int K = 0; K < 4; ++K) {
    m.psi[static_cast<std::size_t>(K)][static_cast<std::size_t>(2 * side_of(K))] =
        exp_kernel(0.4, 2.0, 0, SpatialProfile::gaussian(1.0, 0.1, 0.3));
    m.Psi[static_cast<std::size_t>(K)][static_cast<std::size_t>(K)] = exp_kernel(
        0.3, 4.0, 0, SpatialProfile::gaussian(1.0, 0.0, 0.3), SpatialProfile::gaussian(1.0, 0.0, 1.0));
  }
  return m;
}

BookState book_at(const MicroParams& p, double ask, double bid, double v = 1.0) {
  return make_initial_book(p, ask, bid, flat(v), flat(v));
}

}  // namespace

TEST(TickGrid, TickOfAndExactTicks) {
  TickGrid g{0.1, 1.0};
  EXPECT_EQ(g.tick_of(0.25), 2);
  EXPECT_EQ(g.tick_of(-0.05), -1);
  EXPECT_EQ(g.exact_tick(100.0), 1000);
  EXPECT_THROW(g.exact_tick(100.05), std::invalid_argument);
}

TEST(VolumeProfile, LazyExtensionUsesInitialProfile) {
  ProfileFn f{1.0, {SpatialProfile::gaussian(2.0, 0.0, 1.0)}};
  VolumeProfile ask(10, 1, 0.5, f, 1.0);
  VolumeProfile bid(10, -1, 0.5, f, 1.0);
  EXPECT_DOUBLE_EQ(ask.value(10), f(0.25));
  EXPECT_DOUBLE_EQ(bid.value(9), f(0.75));
  EXPECT_DOUBLE_EQ(ask.value(40), f(15.25));
  ask.at(40) += 1.0;
  EXPECT_DOUBLE_EQ(ask.value(40), f(15.25) + 1.0);
  ask.at(-30) = 0.0;
  EXPECT_DOUBLE_EQ(ask.value(-30), 0.0);
  EXPECT_DOUBLE_EQ(ask.value(11), f(0.75));
}

TEST(VolumeProfile, PairingIsMidpointRule) {
  VolumeProfile v(0, 1, 0.01, flat(2.0), 3.0);
  const double got = v.pair([](double x) { return std::exp(-x * x); }, -1.0, 1.0);
  EXPECT_NEAR(got, 2.0 * std::sqrt(M_PI) * std::erf(1.0), 1e-4);
}

TEST(MicroParams, LevelScales) {
  LimitModel m;
  auto p = build_micro(m, 0.1, 0.05, 0, 1.0);
  auto p1 = rescaled_sequence(p, 1);
  auto p0 = rescaled_sequence(p, 0);
  EXPECT_DOUBLE_EQ(p0.delta_x, 0.1);
  EXPECT_DOUBLE_EQ(p0.delta_v, 0.05);
  EXPECT_DOUBLE_EQ(p1.delta_x, 0.05);
  EXPECT_DOUBLE_EQ(p1.delta_v, 0.0125);
  EXPECT_EQ(rescaled_sequence(p, 3).level, 3);
  EXPECT_THROW(rescaled_sequence(p, -1), std::invalid_argument);
}

TEST(MicroParams, RejectsVolumeScaleAboveTick) {
  LimitModel m;
  try {
    build_micro(m, 0.1, 0.2, 0, 1.0);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("nonnegative"), std::string::npos);
  }
}

TEST(MicroParams, SplitsAroundTheLimit) {
  LimitModel m;
  m.side[0].mu_hat = RateFamily::constant(1.0);
  m.side[0].beta_hat = RateFamily::constant(2.0);
  m.phi[0][0] = exp_kernel(1.0, 1.0);
  m.theta[0][0] = exp_kernel(4.0, 1.0);
  auto p = flat_params(m);
  const PriceView pv{10.0, 9.0};
  EXPECT_NEAR(p.mu_hat(kAskMarket, pv), 1.1, 1e-15);
  EXPECT_NEAR(p.mu_hat(kAskSpread, pv), 0.9, 1e-15);
  EXPECT_NEAR(p.phi[kAskMarket][0](0.0), 1.2, 1e-15);
  EXPECT_NEAR(p.phi[kAskSpread][0](0.0), 0.8, 1e-15);
}

TEST(MicroParams, SpreadPlacementVanishesBelowOneTick) {
  LimitModel m;
  for (auto& s : m.side) {
    s.rho = RateFamily::spread(5.0);
    s.varrho = RateFamily::constant(1.0);
  }
  auto p = flat_params(m);
  EXPECT_EQ(p.rho(kAskSpread, {10.05, 10.0}), 0.0);
  EXPECT_EQ(p.rho(kBidSpread, {10.05, 10.0}), 0.0);
  EXPECT_NEAR(p.rho(kAskSpread, {10.5, 10.0}), 0.4, 1e-12);
  EXPECT_NEAR(p.rho(kAskMarket, {10.05, 10.0}), 0.1, 1e-12);

  LimitModel c;
  c.side[0].rho = RateFamily::constant(2.0);
  auto pc = flat_params(c);
  EXPECT_EQ(pc.rho(kAskSpread, {10.0, 10.0}), 0.0);
  EXPECT_EQ(pc.rho(kAskSpread, {10.1, 10.0}), 2.0);
}

TEST(ActiveIntensity, ExogenousOnly) {
  LimitModel m;
  m.side[0].mu_hat = RateFamily::constant(0.3);
  auto p = flat_params(m);
  EXPECT_NEAR(active_intensity(p, {}, {10, 9}, 1.0, kAskMarket), 0.3 / 0.01, 1e-12);
}

TEST(ActiveIntensity, SinglePastMarketOrder) {
  LimitModel m;
  m.side[0].mu_hat = RateFamily::constant(0.3);
  m.phi[0][kBidMarket] = exp_kernel(0.7, 1.5);
  auto p = flat_params(m);
  std::vector<Event> h{{0.5, {kBidMarket, 0.0}, 0.0}};
  EXPECT_NEAR(active_intensity(p, h, {10, 9}, 1.25, kAskMarket), 30.0 + 0.7 * std::exp(-1.5 * 0.75), 1e-12);
  EXPECT_THROW(active_intensity(p, h, {10, 9}, 0.5, kAskMarket), std::invalid_argument);
}

TEST(ActiveIntensity, PassiveSourceIsWeighted) {
  LimitModel m;
  m.Phi[1][kAskCancel] = exp_kernel(2.0, 1.0, 0, SpatialProfile::one(), SpatialProfile::gaussian(1.0, 0.0, 1.0));
  auto p = flat_params(m);
  std::vector<Event> h{{0.0, {passive_label(kAskCancel), 0.5}, 0.1}};
  const double expect = 0.05 / 0.01 * 2.0 * std::exp(-1.0) * std::exp(-0.25);
  EXPECT_NEAR(active_intensity(p, h, {10, 9}, 1.0, kBidSpread), expect, 1e-12);
}

TEST(PassiveIntensity, ThreeTerms) {
  LimitModel m;
  m.side[1].lambda_hat[1] = {RateFamily::constant(0.4), SpatialProfile::gaussian(1.0, 0.0, 1.0)};
  m.psi[kBidCancel][kAskMarket] = exp_kernel(1.0, 2.0, 0, SpatialProfile::gaussian(1.0, 0.5, 1.0));
  m.Psi[kBidCancel][kBidPlace] = exp_kernel(0.5, 1.0, 1, SpatialProfile::gaussian(1.0, 0.0, 1.0),
                                            SpatialProfile::gaussian(1.0, 1.0, 1.0));
  auto p = flat_params(m);
  const double x = 0.3;
  const double exo = 0.4 * std::exp(-0.09) / 0.05;
  EXPECT_NEAR(passive_intensity(p, {}, {10, 9}, 1.0, kBidCancel, x), exo, 1e-12);
  std::vector<Event> h1{{0.5, {kAskMarket, 0.0}, 0.0}};
  EXPECT_NEAR(passive_intensity(p, h1, {10, 9}, 1.0, kBidCancel, x),
              exo + 0.01 / 0.05 * std::exp(-1.0) * std::exp(-0.04), 1e-12);
  std::vector<Event> h2{{0.5, {passive_label(kBidPlace), 0.2}, 0.3}};
  EXPECT_NEAR(passive_intensity(p, h2, {10, 9}, 1.0, kBidCancel, x),
              exo + 0.5 * 0.5 * std::exp(-0.5) * std::exp(-0.09) * std::exp(-0.64), 1e-12);
}

TEST(ApplyActive, OneTickMoves) {
  auto p = flat_params(LimitModel{});
  auto s = book_at(p, 100.0, 99.9);
  auto a1 = apply_active(s, kAskMarket);
  EXPECT_NEAR(a1.prices(0.1).ask, 100.1, 1e-12);
  auto w = book_at(p, 100.2, 99.9);
  auto narrowed = apply_active(apply_active(w, kAskSpread), kBidSpread);
  EXPECT_EQ(narrowed.ask - narrowed.bid, 1);
  EXPECT_EQ(apply_active(w, kBidMarket).bid, w.bid - 1);
  // Volumes are untouched by price moves.
  EXPECT_EQ(a1.ask_profile, s.ask_profile);
  auto zero = book_at(p, 100.0, 100.0);
  EXPECT_THROW(apply_active(zero, kAskSpread), std::logic_error);
}

TEST(ApplyPassive, PlacementAndCancellation) {
  auto p = build_micro(LimitModel{}, 0.1, 0.05, 0, 1.0);  // dv/dx = 0.5
  auto s = book_at(p, 10.0, 9.0, 1.0);
  auto placed = apply_passive(s, kAskPlace, 0.25, std::log(2.0), p);
  EXPECT_NEAR(placed.ask_profile.value(s.ask + 2), 1.5, 1e-12);
  auto cancelled = apply_passive(s, kBidCancel, 0.05, 200.0, p);
  EXPECT_NEAR(cancelled.bid_profile.value(s.bid), 0.5, 1e-12);
  EXPECT_EQ(apply_passive(s, kAskPlace, 0.3, 0.0, p), s);
  EXPECT_EQ(apply_passive(s, kBidCancel, 0.3, 0.0, p), s);
  // Negative distances address ticks inside the spread.
  auto inside = apply_passive(s, kBidPlace, -0.15, std::log(3.0), p);
  EXPECT_NEAR(inside.bid_profile.value(s.bid + 2), 2.0, 1e-12);
  EXPECT_THROW(apply_passive(s, kAskPlace, 0.0, -1.0, p), std::invalid_argument);
}

TEST(SimulateBook, NothingHappensWithZeroRates) {
  auto p = flat_params(LimitModel{});
  auto s = book_at(p, 10.0, 9.0);
  auto run = simulate_book(p, s, 5.0, 1);
  EXPECT_TRUE(run.events.events.empty());
  EXPECT_EQ(run.final_state, s);
  EXPECT_DOUBLE_EQ(run.J_final, 1.0);
}

TEST(SimulateBook, PoissonDifferenceOfPriceMoves) {
  LimitModel m;
  m.side[0].rho = RateFamily::constant(1.0);
  m.side[0].mu_hat = RateFamily::constant(1.0);
  auto p = flat_params(m);
  auto s = book_at(p, 10.0, 0.0);
  const double T = 1.0;
  std::vector<double> dp;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    MicroOptions o;
    o.record_path = false;
    auto run = simulate_book(p, s, T, 17, r, o);
    dp.push_back(static_cast<double>(run.final_state.ask - s.ask) * p.delta_x);
  }
  auto st = stats::summarize(dp);
  EXPECT_LT(std::abs(st.mean), 3.0 * st.se);
  EXPECT_NEAR(st.variance, 2.0 * 1.0 * 1.0 * T, 0.2);
}

TEST(SimulateBook, SelfExcitingCountsMatchHawkesCore) {
  // Only ask market orders: rho_aL = 0 so rho_aM = delta_x * varrho = 1.
  LimitModel m;
  m.side[0].rho = RateFamily::constant(0.0);
  m.side[0].varrho = RateFamily::constant(1.0);
  m.side[0].mu_hat = RateFamily::constant(0.5);
  m.side[0].beta_hat = RateFamily::constant(1.0);
  SpaceTimeKernel k = exp_kernel(0.6, 2.0);
  k.terms.push_back({{0.5, 1, 3.0}, SpatialProfile::one(), SpatialProfile::one()});
  m.phi[0][kAskMarket] = k;
  auto p = build_micro(m, 1.0, 0.5, 0, 1.0);
  auto s = book_at(p, 10.0, 0.0);
  const double T = 5.0;

  auto mu = constant_rate(1.0);
  ScalarKernel sk;
  sk.eval = [k](double lag) { return k(lag); };
  sk.envelope = [k](double lag) { return k.envelope(lag); };
  sk.l1 = 0.3 + 0.5 / 9.0;
  auto spec = make_multivariate(1, {mu}, {{sk}});

  std::vector<double> micro, core;
  for (std::uint64_t r = 0; r < 3000; ++r) {
    MicroOptions o;
    o.record_path = false;
    micro.push_back(static_cast<double>(simulate_book(p, s, T, 5, r, o).events.events.size()));
    Rng rng(6, r, StreamRole::Events);
    core.push_back(static_cast<double>(simulate_thinning(spec, T, rng).events.size()));
  }
  EXPECT_GT(stats::ks_two_sample(micro, core).p_value, 0.01);
  const double stationary = 1.0 / (1.0 - sk.l1);
  EXPECT_NEAR(stats::summarize(micro).mean / T, stationary, 0.15);
}

TEST(SimulateBook, PassiveCountsAndLocationsMatchHawkesCore) {
  LimitModel m;
  const auto exo = SpatialProfile::gaussian(1.0, 0.4, 0.5);
  const auto h = SpatialProfile::gaussian(1.0, -0.3, 0.4);
  const auto g = SpatialProfile::gaussian(1.0, 0.0, 0.6);
  m.side[0].lambda_hat[0] = {RateFamily::constant(0.1), exo};
  m.side[0].sizes[0] = SizeMeasure::dirac(0.1);
  m.Psi[kAskPlace][kAskPlace] = exp_kernel(1.2, 2.0, 0, h, g);
  const double L = 1.5;
  auto p = build_micro(m, 0.1, 0.05, 0, L);
  auto s = book_at(p, 10.0, 9.0);
  const double T = 4.0;

  HawkesSpec spec;
  spec.marks.labels = {"aL"};
  spec.marks.weights = {1.0};
  spec.marks.spatial = true;
  spec.marks.half_width = L;
  spec.exogenous.rate = [&](double, const Mark& u) { return 0.1 * exo(u.x) / 0.05; };
  spec.exogenous.sup = 2.0;
  spec.kernel.eval = [&](double lag, const Mark& u, const Mark& v) { return 1.2 * std::exp(-2.0 * lag) * h(u.x) * g(v.x); };
  spec.kernel.envelope = [](double lag) { return 1.2 * std::exp(-2.0 * lag); };
  spec.kernel.total_mass_bound = 0.6;
  spec.c0 = 2.0 * 3.0 + 0.6;

  std::vector<double> micro, core, micro_x, core_x;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    MicroOptions o;
    o.record_path = false;
    auto run = simulate_book(p, s, T, 8, r, o);
    micro.push_back(static_cast<double>(run.events.events.size()));
    for (const auto& e : run.events.events) micro_x.push_back(e.u.x);
    Rng rng(9, r, StreamRole::Events);
    auto st = simulate_thinning(spec, T, rng);
    core.push_back(static_cast<double>(st.events.size()));
    for (const auto& e : st.events) core_x.push_back(e.u.x);
  }
  EXPECT_GT(stats::ks_two_sample(micro, core).p_value, 0.01);
  EXPECT_GT(stats::ks_two_sample(micro_x, core_x).p_value, 0.01);
}

TEST(SimulateBook, ReplayIsBitExactAndJIsConsistent) {
  auto p = flat_params(hawkes_book(), 0.1, 0.05, 2.0);
  auto s = book_at(p, 10.1, 9.9);
  auto run = simulate_book(p, s, 1.0, 42);
  ASSERT_GT(run.events.events.size(), 50u);
  std::vector<MicroRecord> path;
  auto replayed = replay(p, s, run.events, &path);
  EXPECT_EQ(replayed, run.final_state);
  ASSERT_EQ(path.size() + 1, run.path.size());
  std::size_t active = 0, passive = 0;
  double prev_J = 1.0;
  EXPECT_DOUBLE_EQ(run.path.front().J, 1.0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& rec = run.path[i + 1];
    EXPECT_EQ(path[i].ask, rec.ask);
    EXPECT_EQ(path[i].bid, rec.bid);
    EXPECT_EQ(path[i].J, rec.J);
    EXPECT_GE(rec.J, prev_J);
    EXPECT_GE(rec.ask, rec.bid);
    const long move = std::abs(rec.ask - run.path[i].ask) + std::abs(rec.bid - run.path[i].bid);
    EXPECT_EQ(move, is_passive_label(rec.label) ? 0 : 1);
    prev_J = rec.J;
    (is_passive_label(rec.label) ? passive : active)++;
  }
  EXPECT_NEAR(run.J_final, 1.0 + 0.01 * active + 0.05 * passive, 1e-12);
  EXPECT_GE(run.final_state.ask_profile.min_value(), 0.0);
  EXPECT_GE(run.final_state.bid_profile.min_value(), 0.0);
}

TEST(SimulateBook, Deterministic) {
  auto p = flat_params(hawkes_book());
  auto s = book_at(p, 10.1, 9.9);
  auto a = simulate_book(p, s, 0.5, 3, 1);
  auto b = simulate_book(p, s, 0.5, 3, 1);
  auto c = simulate_book(p, s, 0.5, 3, 2);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.final_state, b.final_state);
  EXPECT_FALSE(a.events == c.events);
}

TEST(SimulateBook, SpreadStaysNonnegativeUnderSpreadRates) {
  auto p = build_micro(hawkes_book(), 0.1, 0.05, 1, 2.0);
  auto s = book_at(p, 10.1, 9.9);
  for (std::uint64_t r = 0; r < 100; ++r) {
    MicroOptions o;
    o.record_path = false;
    o.record_events = false;
    auto run = simulate_book(p, s, 1.0, 77, r, o);
    ASSERT_GE(run.min_spread_ticks, 0);
  }
}

TEST(SimulateBook, SnapshotsAtSampleTimes) {
  auto p = flat_params(hawkes_book());
  auto s = book_at(p, 10.1, 9.9);
  MicroOptions o;
  o.sample_times = {0.0, 0.25, 0.5, 2.0};
  auto run = simulate_book(p, s, 1.0, 4, 0, o);
  ASSERT_EQ(run.snapshots.size(), 4u);
  EXPECT_EQ(run.snapshots.front(), s);
  EXPECT_EQ(run.snapshots.back(), run.final_state);
  EventStream head;
  for (const auto& e : run.events.events)
    if (e.t <= 0.5) head.events.push_back(e);
  EXPECT_EQ(replay(p, s, head), run.snapshots[2]);
}
