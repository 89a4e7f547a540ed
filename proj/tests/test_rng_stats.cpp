#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hlob/rng.hpp"
#include "hlob/stats.hpp"

using namespace hlob;

TEST(Rng, SameKeySameStream) {
  Rng a(42, 3, StreamRole::Noise), b(42, 3, StreamRole::Noise);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, RolesAndReplicatesGiveDistinctKeys) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t rep = 0; rep < 50; ++rep)
    for (std::uint64_t role = 1; role <= 6; ++role) keys.insert(derive_key(7, rep, role));
  EXPECT_EQ(keys.size(), 300u);
}

TEST(Rng, FromKeyReproducesStream) {
  Rng a(9, 1, StreamRole::Marks);
  Rng b = Rng::from_key(a.key());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, UniformMomentsAndRange) {
  Rng r(1);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.005);
}

TEST(Rng, NormalPassesKs) {
  Rng r(2);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = r.normal();
  auto res = stats::ks_one_sample(xs, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); });
  EXPECT_GT(res.p_value, 0.01);
}

TEST(Rng, ExponentialPassesKs) {
  Rng r(3);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = r.exponential(2.0);
  auto res = stats::ks_one_sample(xs, [](double x) { return 1.0 - std::exp(-2.0 * x); });
  EXPECT_GT(res.p_value, 0.01);
}

TEST(Stats, SummaryOfKnownSample) {
  std::vector<double> xs = {1, 2, 3, 4};
  auto s = stats::summarize(xs);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.se, std::sqrt(5.0 / 3.0 / 4.0));
}

TEST(Stats, KolmogorovSurvivalKnownValues) {
  // Q(1.36) is the classical 5% critical value.
  EXPECT_NEAR(stats::kolmogorov_survival(1.358), 0.05, 1e-3);
  EXPECT_NEAR(stats::kolmogorov_survival(1.628), 0.01, 1e-3);
  EXPECT_DOUBLE_EQ(stats::kolmogorov_survival(0.0), 1.0);
}

TEST(Stats, TwoSampleKsDetectsShift) {
  Rng r(4);
  std::vector<double> a(5000), b(5000), c(5000);
  for (auto& x : a) x = r.normal();
  for (auto& x : b) x = r.normal();
  for (auto& x : c) x = r.normal() + 0.2;
  EXPECT_GT(stats::ks_two_sample(a, b).p_value, 0.01);
  EXPECT_LT(stats::ks_two_sample(a, c).p_value, 1e-6);
}

TEST(Stats, CovarianceOfIndependentIsNearZero) {
  Rng r(5);
  std::vector<double> a(20000), b(20000);
  for (auto& x : a) x = r.normal();
  for (auto& x : b) x = r.normal();
  auto c = stats::covariance(a, b);
  EXPECT_LT(std::abs(c.estimate), 3.0 * c.se);
  EXPECT_NEAR(c.se, 1.0 / std::sqrt(20000.0), 2e-3);
}

TEST(Stats, PearsonOfLinearIsOne) {
  std::vector<double> a = {1, 2, 3, 4, 5}, b = {3, 5, 7, 9, 11};
  EXPECT_NEAR(stats::pearson(a, b), 1.0, 1e-14);
}
