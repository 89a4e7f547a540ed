#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hlob/hawkes.hpp"
#include "hlob/stats.hpp"

using namespace hlob;

namespace {

HawkesSpec scalar_spec(double mu, double mass, double beta) {
  return make_multivariate(1, {constant_rate(mu)}, {{mass > 0.0 ? exponential_kernel(mass, beta) : zero_kernel()}});
}

std::vector<double> counts(const HawkesSpec& spec, double horizon, int reps, std::uint64_t seed) {
  std::vector<double> out;
  for (int r = 0; r < reps; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    out.push_back(static_cast<double>(simulate_thinning(spec, horizon, rng).events.size()));
  }
  return out;
}

}  // namespace

TEST(IntensityAt, EmptyHistoryGivesExogenous) {
  auto spec = scalar_spec(2.0, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(intensity_at(spec, {}, 3.0, Mark{}), 2.0);
}

TEST(IntensityAt, ZeroKernelIgnoresHistory) {
  auto spec = scalar_spec(1.5, 0.0, 1.0);
  std::vector<Event> h = {{0.2, {}, 0.0}, {0.9, {}, 0.0}};
  EXPECT_DOUBLE_EQ(intensity_at(spec, h, 1.0, Mark{}), 1.5);
}

TEST(IntensityAt, SingleEventHandSum) {
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  std::vector<Event> h = {{1.0, {}, 0.0}};
  EXPECT_NEAR(intensity_at(spec, h, 2.0, Mark{}), 1.0 + 0.5 * std::exp(-1.0), 1e-15);
}

TEST(IntensityAt, RejectsFutureHistory) {
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  std::vector<Event> h = {{2.0, {}, 0.0}};
  EXPECT_THROW(intensity_at(spec, h, 2.0, Mark{}), std::invalid_argument);
}

TEST(Thinning, PoissonReductionMeanAndGaps) {
  auto spec = scalar_spec(2.0, 0.0, 1.0);
  auto c = counts(spec, 5.0, 4000, 17);
  auto s = stats::summarize(c);
  EXPECT_LT(std::abs(s.mean - 10.0), 3.0 * s.se);

  std::vector<double> gaps;
  Rng rng(18);
  double prev = 0.0;
  for (const auto& e : simulate_thinning(spec, 5000.0, rng).events) {
    gaps.push_back(e.t - prev);
    prev = e.t;
  }
  gaps.resize(10000);
  auto ks = stats::ks_one_sample(gaps, [](double x) { return 1.0 - std::exp(-2.0 * x); });
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(Thinning, Deterministic) {
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  auto a = simulate_thinning(spec, 50.0, 99);
  auto b = simulate_thinning(spec, 50.0, 99);
  EXPECT_TRUE(a == b);
  auto c = simulate_thinning(spec, 50.0, 100);
  EXPECT_FALSE(a == c);
}

TEST(Thinning, StrictlyIncreasingTimesWithinHorizon) {
  auto spec = scalar_spec(1.0, 0.6, 2.0);
  auto s = simulate_thinning(spec, 100.0, 5);
  for (std::size_t i = 1; i < s.events.size(); ++i) EXPECT_LT(s.events[i - 1].t, s.events[i].t);
  for (const auto& e : s.events) {
    EXPECT_GE(e.t, 0.0);
    EXPECT_LE(e.t, 100.0);
  }
}

TEST(Thinning, SubcriticalStationaryRate) {
  // E[lambda] = mu / (1 - |phi|_1) = 2.
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  std::vector<double> rates;
  for (int r = 0; r < 40; ++r) {
    Rng rng(23, static_cast<std::uint64_t>(r));
    auto s = simulate_thinning(spec, 250.0, rng);
    // Discard a burn-in window.
    const auto n = std::count_if(s.events.begin(), s.events.end(), [](const Event& e) { return e.t > 50.0; });
    rates.push_back(static_cast<double>(n) / 200.0);
  }
  auto st = stats::summarize(rates);
  EXPECT_LT(std::abs(st.mean - 2.0), 3.0 * st.se);
}

TEST(Thinning, InvalidEnvelopeIsDetected) {
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  spec.kernel.envelope = [](double lag) { return 0.01 * std::exp(-std::max(lag, 0.0)); };
  Rng rng(1);
  EXPECT_THROW(
      {
        for (int i = 0; i < 50; ++i) simulate_thinning(spec, 100.0, rng);
      },
      std::logic_error);
}

TEST(Thinning, RejectsBoundAboveC0) {
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  spec.c0 = 1.0;
  EXPECT_THROW(simulate_thinning(spec, 1.0, 1), std::invalid_argument);
}

TEST(Compensator, ZeroFunctionGivesZero) {
  auto spec = scalar_spec(1.0, 0.5, 1.0);
  auto s = simulate_thinning(spec, 10.0, 3);
  EXPECT_EQ(compensated_integral(spec, s, [](double, const Mark&) { return 0.0; }), 0.0);
}

TEST(Compensator, PoissonCaseIsCountMinusMean) {
  auto spec = scalar_spec(2.0, 0.0, 1.0);
  auto s = simulate_thinning(spec, 5.0, 4);
  const double v = compensated_integral(spec, s, [](double, const Mark&) { return 1.0; });
  EXPECT_NEAR(v, static_cast<double>(s.events.size()) - 10.0, 1e-10);
}

TEST(Compensator, MartingaleMeanForExponentialKernel) {
  auto spec = scalar_spec(1.0, 0.5, 2.0);
  std::vector<double> vals, brackets;
  for (int r = 0; r < 1000; ++r) {
    Rng rng(31, static_cast<std::uint64_t>(r));
    auto s = simulate_thinning(spec, 5.0, rng);
    auto f = [](double t, const Mark&) { return std::cos(t); };
    vals.push_back(compensated_integral(spec, s, f, {0.1, 8}));
    brackets.push_back(quadratic_variation(s, f));
  }
  auto st = stats::summarize(vals);
  EXPECT_LT(std::abs(st.mean), 3.0 * st.se);
  // E[M^2] = E[bracket].
  std::vector<double> sq;
  for (double v : vals) sq.push_back(v * v);
  auto s2 = stats::summarize(sq);
  auto sb = stats::summarize(brackets);
  EXPECT_LT(std::abs(s2.mean - sb.mean), 3.0 * std::hypot(s2.se, sb.se));
}

TEST(Compensator, SpatialMarksMartingale) {
  // Marked process on two labels times [-1, 1] with a separable spatial kernel.
  HawkesSpec spec;
  spec.marks.labels = {"a", "b"};
  spec.marks.weights = {1.0, 0.5};
  spec.marks.spatial = true;
  spec.marks.half_width = 1.0;
  spec.exogenous.rate = [](double, const Mark& u) { return 0.5 + 0.25 * u.x * u.x; };
  spec.exogenous.sup = 0.75;
  spec.kernel.eval = [](double lag, const Mark& u, const Mark& v) {
    return 0.4 * std::exp(-2.0 * lag) * std::exp(-(u.x - v.x) * (u.x - v.x));
  };
  spec.kernel.envelope = [](double lag) { return 0.4 * std::exp(-2.0 * std::max(lag, 0.0)); };
  spec.kernel.total_mass_bound = 0.4 / 2.0 * 1.5 * 2.0;
  spec.c0 = 0.75 * 3.0 + spec.kernel.total_mass_bound;
  std::vector<double> vals;
  for (int r = 0; r < 400; ++r) {
    Rng rng(41, static_cast<std::uint64_t>(r));
    auto s = simulate_thinning(spec, 3.0, rng);
    vals.push_back(compensated_integral(spec, s, [](double, const Mark& u) { return u.label == 0 ? u.x : 1.0; },
                                        {0.25, 16}));
  }
  auto st = stats::summarize(vals);
  EXPECT_LT(std::abs(st.mean), 3.0 * st.se);
}

TEST(Multivariate, DimensionMismatchThrows) {
  EXPECT_THROW(make_multivariate(2, {constant_rate(1.0)}, {{zero_kernel(), zero_kernel()}}), std::invalid_argument);
  EXPECT_THROW(make_multivariate(2, {constant_rate(1.0), constant_rate(1.0)}, {{zero_kernel()}, {zero_kernel()}}),
               std::invalid_argument);
}

TEST(Multivariate, IntensityReproducesMatrixForm) {
  auto spec = make_multivariate(2, {constant_rate(1.0), constant_rate(2.0)},
                                {{exponential_kernel(0.2, 1.0), exponential_kernel(0.3, 1.0)},
                                 {zero_kernel(), exponential_kernel(0.1, 1.0)}});
  std::vector<Event> h = {{0.5, {0, 0.0}, 0.0}, {1.0, {1, 0.0}, 0.0}};
  const double t = 2.0;
  EXPECT_NEAR(intensity_at(spec, h, t, Mark{0, 0.0}),
              1.0 + 0.2 * std::exp(-1.5) + 0.3 * std::exp(-1.0), 1e-14);
  EXPECT_NEAR(intensity_at(spec, h, t, Mark{1, 0.0}), 2.0 + 0.1 * std::exp(-1.0), 1e-14);
}

TEST(Multivariate, IndependentComponentsAreUncorrelated) {
  auto spec = make_multivariate(2, {constant_rate(1.0), constant_rate(1.0)},
                                {{exponential_kernel(0.4, 2.0), zero_kernel()},
                                 {zero_kernel(), exponential_kernel(0.4, 2.0)}});
  std::vector<double> n0, n1;
  for (int r = 0; r < 2000; ++r) {
    Rng rng(51, static_cast<std::uint64_t>(r));
    auto s = simulate_thinning(spec, 5.0, rng);
    n0.push_back(static_cast<double>(s.count(0)));
    n1.push_back(static_cast<double>(s.count(1)));
  }
  const double rho = stats::pearson(n0, n1);
  EXPECT_LT(std::abs(rho), 3.0 / std::sqrt(2000.0));
}

TEST(Multivariate, SymmetricKernelsGiveExchangeableMarginals) {
  auto spec = make_multivariate(2, {constant_rate(1.0), constant_rate(1.0)},
                                {{exponential_kernel(0.2, 2.0), exponential_kernel(0.3, 2.0)},
                                 {exponential_kernel(0.3, 2.0), exponential_kernel(0.2, 2.0)}});
  std::vector<double> n0, n1;
  for (int r = 0; r < 2000; ++r) {
    Rng rng(52, static_cast<std::uint64_t>(r));
    auto s = simulate_thinning(spec, 5.0, rng);
    n0.push_back(static_cast<double>(s.count(0)));
    n1.push_back(static_cast<double>(s.count(1)));
  }
  EXPECT_GT(stats::ks_two_sample(n0, n1).p_value, 0.01);
}

TEST(ExponentialMarkov, RejectsNonExponentialKernel) {
  HawkesSpec spec = scalar_spec(1.0, 0.5, 1.0);
  spec.exponential.reset();
  EXPECT_THROW(make_exponential_markov(spec), std::invalid_argument);
}

TEST(ExponentialMarkov, ZeroKernelIsPoisson) {
  auto spec = scalar_spec(2.0, 0.0, 1.0);
  auto sim = make_exponential_markov(spec);
  std::vector<double> c;
  for (int r = 0; r < 4000; ++r) {
    Rng rng(61, static_cast<std::uint64_t>(r));
    c.push_back(static_cast<double>(sim.run(5.0, rng).events.size()));
  }
  auto s = stats::summarize(c);
  EXPECT_LT(std::abs(s.mean - 10.0), 3.0 * s.se);
  EXPECT_LT(std::abs(s.variance - 10.0), 3.0 * s.variance_se);
}

TEST(ExponentialMarkov, MatchesGenericThinning) {
  auto spec = make_multivariate(2, {constant_rate(1.0), constant_rate(0.5)},
                                {{exponential_kernel(0.3, 2.0), exponential_kernel(0.2, 2.0)},
                                 {exponential_kernel(0.1, 2.0), exponential_kernel(0.4, 2.0)}});
  auto sim = make_exponential_markov(spec);
  std::vector<double> a, b;
  for (int r = 0; r < 4000; ++r) {
    Rng r1(71, static_cast<std::uint64_t>(r)), r2(72, static_cast<std::uint64_t>(r));
    a.push_back(static_cast<double>(simulate_thinning(spec, 4.0, r1).events.size()));
    b.push_back(static_cast<double>(sim.run(4.0, r2).events.size()));
  }
  EXPECT_GT(stats::ks_two_sample(a, b).p_value, 0.01);
}

TEST(ExponentialMarkov, FastDecayApproachesPoisson) {
  // Fixed amplitude 0.5 with decay 500: kernel mass 1e-3, so counts are
  // nearly Poisson(mu T).
  auto spec = scalar_spec(2.0, 0.5 / 500.0, 500.0);
  auto sim = make_exponential_markov(spec);
  std::vector<double> h, p;
  Rng pois(82);
  for (int r = 0; r < 4000; ++r) {
    Rng rng(81, static_cast<std::uint64_t>(r));
    h.push_back(static_cast<double>(sim.run(5.0, rng).events.size()));
    p.push_back(static_cast<double>(pois.poisson(10.0)));
  }
  EXPECT_GT(stats::ks_two_sample(h, p).p_value, 0.01);
}
