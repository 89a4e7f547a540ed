#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hlob/kernels.hpp"
#include "hlob/rng.hpp"
#include "hlob/stats.hpp"

using namespace hlob;

namespace {

// Composite Simpson, used as an independent check of the closed forms.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(TemporalTerm, Families) {
  TemporalTerm cst{2.0, 0, 0.0}, ex{1.5, 0, 2.0}, ga{3.0, 1, 1.5};
  EXPECT_DOUBLE_EQ(cst(4.0), 2.0);
  EXPECT_DOUBLE_EQ(ex(0.5), 1.5 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(ga(2.0), 3.0 * 2.0 * std::exp(-3.0));
  EXPECT_EQ(ex(-0.1), 0.0);
}

TEST(TemporalTerm, IntegralMatchesQuadrature) {
  for (TemporalTerm t : {TemporalTerm{2.0, 0, 0.0}, TemporalTerm{1.5, 0, 2.0}, TemporalTerm{3.0, 1, 1.5}}) {
    EXPECT_NEAR(t.integral(1.7), simpson([&](double s) { return t(s); }, 0.0, 1.7), 1e-10);
  }
}

TEST(TemporalTerm, LpNormMatchesQuadrature) {
  for (TemporalTerm t : {TemporalTerm{1.5, 0, 2.0}, TemporalTerm{3.0, 1, 1.5}, TemporalTerm{-0.7, 0, 0.0}}) {
    for (double p : {1.0, 2.0, 4.0}) {
      const double q = std::pow(simpson([&](double s) { return std::pow(std::abs(t(s)), p); }, 0.0, 3.0), 1.0 / p);
      EXPECT_NEAR(t.lp_norm(p, 3.0), q, 1e-9);
    }
  }
}

TEST(TemporalTerm, EnvelopeDominatesAndIsNonincreasing) {
  for (TemporalTerm t : {TemporalTerm{1.5, 0, 2.0}, TemporalTerm{3.0, 1, 1.5}, TemporalTerm{-2.0, 1, 0.5}}) {
    double prev = t.envelope(0.0);
    for (double s = 0.0; s < 10.0; s += 0.01) {
      EXPECT_GE(t.envelope(s) + 1e-15, std::abs(t(s)));
      EXPECT_LE(t.envelope(s), prev + 1e-15);
      prev = t.envelope(s);
    }
  }
}

TEST(SpatialProfile, MassAndNorms) {
  auto g = SpatialProfile::gaussian(2.0, 0.3, 0.7);
  EXPECT_NEAR(g.mass(-1.0, 2.0), simpson(g, -1.0, 2.0), 1e-10);
  EXPECT_NEAR(g.mass(2.0, 3.0), simpson(g, 2.0, 3.0), 1e-12);
  EXPECT_NEAR(g.mass(-3.0, -2.0), simpson(g, -3.0, -2.0), 1e-12);
  for (double p : {1.0, 2.0, 4.0}) {
    const double q = std::pow(simpson([&](double x) { return std::pow(g(x), p); }, -4.0, 4.0), 1.0 / p);
    EXPECT_NEAR(g.lp_norm(p, -4.0, 4.0), q, 1e-9);
  }
  EXPECT_DOUBLE_EQ(SpatialProfile::one().mass(-2.0, 3.0), 5.0);
}

TEST(SpatialProfile, TruncatedSamplingMatchesCdf) {
  auto g = SpatialProfile::gaussian(1.0, 0.5, 0.8);
  for (auto [lo, hi] : {std::pair{-2.0, 2.0}, std::pair{1.5, 3.0}, std::pair{-3.0, -1.0}}) {
    Rng r(11);
    std::vector<double> xs(20000);
    for (auto& x : xs) {
      x = g.sample(lo, hi, r.uniform());
      ASSERT_GE(x, lo);
      ASSERT_LE(x, hi);
    }
    const double total = g.mass(lo, hi);
    auto res = stats::ks_one_sample(xs, [&](double x) { return g.mass(lo, x) / total; });
    EXPECT_GT(res.p_value, 0.01) << lo << " " << hi;
  }
}

TEST(ErlangState, MatchesDirectSum) {
  // Events at 0.1, 0.4, 1.0 with weights; compare power 0 and 1 states to sums.
  const double kappa = 1.3;
  const std::vector<std::pair<double, double>> events = {{0.1, 1.0}, {0.4, 0.5}, {1.0, 2.0}};
  ErlangState st;
  double now = 0.0;
  for (auto [s, w] : events) {
    st.decay(s - now, kappa);
    now = s;
    st.jump(w);
  }
  st.decay(2.0 - now, kappa);
  double s0 = 0.0, s1 = 0.0;
  for (auto [s, w] : events) {
    s0 += w * std::exp(-kappa * (2.0 - s));
    s1 += w * (2.0 - s) * std::exp(-kappa * (2.0 - s));
  }
  EXPECT_NEAR(st.value(0), s0, 1e-14);
  EXPECT_NEAR(st.value(1), s1, 1e-14);
}

TEST(ErlangState, SupAheadBoundsFuture) {
  const double kappa = 2.0;
  ErlangState st;
  st.jump(1.0);
  st.decay(0.05, kappa);
  st.jump(0.3);
  const double bound = st.sup_ahead(1, kappa);
  double best = 0.0;
  ErlangState probe = st;
  for (int i = 0; i < 5000; ++i) {
    best = std::max(best, probe.value(1));
    probe.decay(0.001, kappa);
  }
  EXPECT_GE(bound + 1e-14, best);
  EXPECT_NEAR(bound, best, 1e-5);
}

TEST(SpaceTimeKernel, SumAndScale) {
  SpaceTimeKernel k;
  k.terms.push_back({{1.0, 0, 1.0}, SpatialProfile::gaussian(1.0, 0.0, 1.0), SpatialProfile::one()});
  k.terms.push_back({{0.5, 1, 2.0}, SpatialProfile::one(), SpatialProfile::one()});
  const double v = k(0.3, 0.5, 0.0);
  EXPECT_NEAR(v, std::exp(-0.3) * std::exp(-0.25) + 0.5 * 0.3 * std::exp(-0.6), 1e-15);
  EXPECT_NEAR(k.scaled(2.0)(0.3, 0.5, 0.0), 2.0 * v, 1e-15);
  EXPECT_TRUE(k.nonnegative());
  EXPECT_FALSE(k.scaled(-1.0).nonnegative());
}
