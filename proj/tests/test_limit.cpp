#include <gtest/gtest.h>

#include <cmath>

#include "hlob/limit.hpp"
#include "hlob/oracles.hpp"

using namespace hlob;

namespace {

LimitOptions opts(double dt, double horizon) {
  LimitOptions o;
  o.dt = dt;
  o.horizon = horizon;
  return o;
}

LimitModel spread_model() {
  LimitModel m;
  for (auto& s : m.side) {
    s.rho = RateFamily::spread(1.0);
    s.varrho = RateFamily::constant(1.0);
    s.mu_hat = RateFamily::constant(1.0);
  }
  m.phi[0][kAskMarket].terms.push_back({{0.5, 0, 2.0}, {}, {}});
  m.phi[1][kBidMarket].terms.push_back({{0.5, 0, 2.0}, {}, {}});
  return m;
}

}  // namespace

TEST(DriftDiffusion, Examples) {
  LimitModel m;
  m.side[0].rho = RateFamily::constant(0.0);
  m.side[0].varrho = RateFamily::constant(3.0);
  m.side[1].rho = RateFamily::constant(1.0);
  const auto d = drift_diffusion(m, {1.0, 0.5}, {0.7, 2.0}, {5.0, 0.0});
  EXPECT_DOUBLE_EQ(d.diffusion[0], 0.0);
  EXPECT_DOUBLE_EQ(d.drift[0], 3.0 * 0.7);
  EXPECT_DOUBLE_EQ(d.diffusion[1], 2.0);
  EXPECT_EQ(d.clamped, 0);
  const auto neg = drift_diffusion(m, {1.0, 0.5}, {0.7, -1e-18}, {0.0, 0.0});
  EXPECT_EQ(neg.clamped, 1);
  EXPECT_DOUBLE_EQ(neg.diffusion[1], 0.0);
}

TEST(DriftDiffusion, OneSidedPriceSquaredMatchesMultiplicativeNoise) {
  const auto m = one_sided_intensity_model(1.0, {1.0, 0, 1.0}, 100.0);
  const auto d = drift_diffusion(m, {1.5, 0.0}, {2.0, 0.0}, {0.0, 0.0});
  EXPECT_NEAR(d.diffusion[0], 1.5 * std::sqrt(2.0), 1e-14);
  EXPECT_DOUBLE_EQ(d.drift[0], 0.0);
}

TEST(NoisePath, IncrementsAndCoarsening) {
  const auto n = NoisePath::generate(3, 0, 20000, 1e-2);
  double s0 = 0.0, s1 = 0.0, cross = 0.0;
  for (const auto& i : n.increments) {
    s0 += i[0] * i[0];
    s1 += i[1] * i[1];
    cross += i[0] * i[1];
  }
  EXPECT_NEAR(s0 / 20000, 1e-2, 5e-4);
  EXPECT_NEAR(s1 / 20000, 1e-2, 5e-4);
  EXPECT_NEAR(cross / 20000, 0.0, 5e-4);
  const auto c = n.coarsen(4);
  ASSERT_EQ(c.increments.size(), 5000u);
  EXPECT_DOUBLE_EQ(c.dt, 4e-2);
  EXPECT_DOUBLE_EQ(c.increments[1][0],
                   n.increments[4][0] + n.increments[5][0] + n.increments[6][0] + n.increments[7][0]);
  EXPECT_THROW(n.coarsen(3), std::invalid_argument);
}

TEST(LimitSolver, ZeroNoiseZeroKernelsKeepsPricesConstant) {
  LimitModel m;
  for (auto& s : m.side) {
    s.rho = RateFamily::constant(1.0);
    s.mu_hat = RateFamily::constant(2.0);
  }
  SpatialGrid g(2.0, 21);
  const auto init = make_limit_state(g, 1.0, 0.9, {1.0, {}}, {1.0, {}});
  const auto path = solve_path(m, g, init, opts(1e-2, 1.0), NoisePath::zero(100, 1e-2));
  EXPECT_EQ(path.final_state.pa, 1.0);
  EXPECT_EQ(path.final_state.pb, 0.9);
  EXPECT_EQ(path.records.size(), 101u);
  EXPECT_EQ(path.records.back().mu[0], 2.0);
}

TEST(LimitSolver, RejectsInconsistentSetup) {
  SpatialGrid g(2.0, 21);
  const auto init = make_limit_state(g, 1.0, 0.9, {1.0, {}}, {1.0, {}});
  EXPECT_THROW(LimitSolver(LimitModel{}, g, init, opts(0.3, 1.0)), std::invalid_argument);
  EXPECT_THROW(LimitSolver(LimitModel{}, SpatialGrid(2.0, 11), init, opts(0.1, 1.0)), std::invalid_argument);
  LimitSolver s(LimitModel{}, g, init, opts(0.1, 1.0));
  EXPECT_THROW(s.run(NoisePath::zero(5, 0.1)), std::invalid_argument);
}

// Constant prices turn the book equation into V' = lambda (1 - V) with
// lambda = e^{-x^2} mu, mu = P0^2 (1 + int K). For phi = 0.5 e^{-t} the
// effective kernel is e^{-t}, whose resolvent is 1, so mu = 1 + t.
TEST(LimitSolver, BookMatchesClosedFormAtConstantPrice) {
  const auto m = one_sided_book_model({0.5, 0, 1.0}, 10.0, default_book_coupling());
  SpatialGrid g(6.0, 201);
  ProfileFn v0{1.0, {SpatialProfile::gaussian(0.25, 0.5, 1.0)}};
  const auto init = make_limit_state(g, 1.0, 0.0, v0, {0.0, {}});
  const double dt = 1e-3;
  const auto path = solve_path(m, g, init, opts(dt, 1.0), NoisePath::zero(1000, dt));
  EXPECT_EQ(path.final_state.pa, 1.0);
  EXPECT_NEAR(path.records.back().mu[0], 2.0, 1e-5);
  double err = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const double x = g.node(j);
    const double exact = 1.0 + (v0(x) - 1.0) * std::exp(-std::exp(-x * x) * 1.5);
    err = std::max(err, std::abs(path.final_state.va[static_cast<std::size_t>(j)] - exact));
  }
  EXPECT_LE(err, 1e-3);
}

TEST(LimitSolver, IntensityMatchesExponentialClosedFormOnRealizedPath) {
  const double sigma2 = 1.0, kappa = 1.0, dt = 1e-3;
  const auto m = one_sided_intensity_model(sigma2, {1.0, 0, kappa}, 50.0);
  SpatialGrid g(1.0, 3);
  const auto init = make_limit_state(g, 1.0, 0.0, {0.0, {}}, {0.0, {}});
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    const auto path = solve_path(m, g, init, opts(dt, 1.0), 11, rep);
    std::vector<double> p;
    for (const auto& r : path.records) p.push_back(r.pa);
    const auto mu = closed_form_mu_exponential(p, dt, sigma2, kappa);
    double rel = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      rel = std::max(rel, std::abs(path.records[i].mu[0] - mu[i]) / mu[i]);
    EXPECT_LE(rel, 1e-3) << "replicate " << rep;
  }
}

TEST(LimitSolver, StrongSelfConvergenceWithSharedNoise) {
  const auto m = one_sided_intensity_model(0.25, {0.5, 0, 2.0}, 3.0);
  SpatialGrid g(1.0, 3);
  const auto init = make_limit_state(g, 1.0, 0.0, {0.0, {}}, {0.0, {}});
  const double fine_dt = 1.0 / 4096;
  std::array<double, 3> err{};
  const std::array<std::size_t, 3> factors{4, 8, 16};
  const int paths = 24;
  for (int r = 0; r < paths; ++r) {
    const auto noise = NoisePath::generate(5, static_cast<std::uint64_t>(r), 4096, fine_dt);
    const double ref = solve_path(m, g, init, opts(fine_dt, 1.0), noise).final_state.pa;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      const auto coarse = noise.coarsen(factors[k]);
      const double pa = solve_path(m, g, init, opts(coarse.dt, 1.0), coarse).final_state.pa;
      err[k] += (pa - ref) * (pa - ref) / paths;
    }
  }
  for (auto& e : err) e = std::sqrt(e);
  const double slope = std::log2(err[2] / err[0]) / 2.0;
  EXPECT_GT(slope, 0.3);
  EXPECT_LT(slope, 1.3);
  EXPECT_LT(err[0], err[2]);
}

TEST(LimitSolver, PathwiseStabilityUnderSharedNoise) {
  const auto m = spread_model();
  SpatialGrid g(1.0, 5);
  auto ratio = [&](double delta, double dt) {
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
    const auto noise = NoisePath::generate(9, 0, steps, dt);
    LimitSolver a(m, g, make_limit_state(g, 1.5, 1.0, {0.0, {}}, {0.0, {}}), opts(dt, 1.0));
    LimitSolver b(m, g, make_limit_state(g, 1.5 + delta, 1.0, {0.0, {}}, {0.0, {}}), opts(dt, 1.0));
    const auto pa = a.run(noise), pb = b.run(noise);
    double sup = 0.0;
    for (std::size_t i = 0; i < pa.records.size(); ++i)
      sup = std::max(sup, std::abs(pa.records[i].pa - pb.records[i].pa) + std::abs(pa.records[i].pb - pb.records[i].pb));
    return sup / delta;
  };
  const double c1 = ratio(1e-4, 2e-3), c2 = ratio(5e-5, 2e-3), c3 = ratio(1e-4, 1e-3);
  EXPECT_TRUE(std::isfinite(c1));
  EXPECT_LT(c1, 50.0);
  EXPECT_NEAR(c2 / c1, 1.0, 0.2);
  EXPECT_LT(c3, 3.0 * c1);
  EXPECT_GT(c3, c1 / 3.0);
}

TEST(LimitSolver, VolumeContractsMonotonicallyToFixedPoint) {
  LimitModel m;
  auto& a = m.side[0];
  a.lambda_hat[0] = {RateFamily::constant(1.0), SpatialProfile::one()};
  a.lambda_hat[1] = {RateFamily::constant(2.0), SpatialProfile::one()};
  a.sizes[0] = SizeMeasure::dirac(std::log(2.0));
  a.sizes[1] = SizeMeasure::dirac(std::log(2.0));
  SpatialGrid g(1.0, 5);
  ProfileFn v0{1.0, {SpatialProfile::gaussian(0.8, -1.0, 0.5), SpatialProfile::gaussian(-0.8, 1.0, 0.5)}};
  LimitOptions o = opts(1e-2, 3.0);
  auto path = solve_path(m, g, make_limit_state(g, 1.0, 0.0, v0, {0.0, {}}), o, NoisePath::zero(300, 1e-2));
  for (std::size_t j : {0u, 4u}) {
    const double start = v0(g.nodes()[j]);
    const double end = path.final_state.va[j];
    EXPECT_LT(std::abs(end - 1.0), std::abs(start - 1.0));
    EXPECT_EQ(end > 1.0, start > 1.0);
  }
  // monotone along the path: step through manually
  LimitSolver s(m, g, make_limit_state(g, 1.0, 0.0, v0, {0.0, {}}), o);
  double prev_hi = s.state().va[0], prev_lo = s.state().va[4];
  for (int i = 0; i < 300; ++i) {
    s.step({0.0, 0.0});
    EXPECT_LE(s.state().va[0], prev_hi);
    EXPECT_GE(s.state().va[4], prev_lo);
    EXPECT_GE(s.state().va[0], 1.0);
    EXPECT_LE(s.state().va[4], 1.0);
    prev_hi = s.state().va[0];
    prev_lo = s.state().va[4];
  }
}

TEST(LimitSolver, DeterministicGivenSeed) {
  const auto m = spread_model();
  SpatialGrid g(1.0, 5);
  const auto init = make_limit_state(g, 1.2, 1.0, {1.0, {}}, {1.0, {}});
  LimitOptions o = opts(1e-3, 0.5);
  o.cadence = 10;
  const auto a = solve_path(m, g, init, o, 17, 2);
  const auto b = solve_path(m, g, init, o, 17, 2);
  const auto c = solve_path(m, g, init, o, 17, 3);
  EXPECT_EQ(a.records.size(), 51u);
  EXPECT_EQ(a.final_state, b.final_state);
  EXPECT_NE(a.final_state.pa, c.final_state.pa);
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].pa, b.records[i].pa);
}

TEST(LimitSolver, StoredIntensitiesSolveTheIntegralEquations) {
  auto m = spread_model();
  m.side[0].lambda_hat[0] = {RateFamily::constant(1.0), SpatialProfile::gaussian(1.0, 0.0, 0.5)};
  m.psi[kAskPlace][kBidMarket].terms.push_back({{0.7, 1, 1.5}, SpatialProfile::gaussian(1.0, 0.2, 0.4), {}});
  m.Phi[1][kAskPlace].terms.push_back({{0.4, 0, 1.0}, {}, SpatialProfile::gaussian(1.0, 0.0, 1.0)});
  m.theta[0][kBidMarket].terms.push_back({{-0.3, 0, 1.0}, {}, {}});
  SpatialGrid g(2.0, 41);
  LimitOptions o = opts(1e-2, 1.0);
  o.store_fields = true;
  const auto init = make_limit_state(g, 1.2, 1.0, {1.0, {}}, {1.0, {}});
  const auto path = solve_path(m, g, init, o, 4, 0);
  std::vector<ExogenousValue> exo;
  std::vector<std::array<double, 2>> rho;
  for (const auto& r : path.records) {
    exo.push_back(exogenous_value(m, g, {r.pa, r.pb}));
    rho.push_back(limit_rho(m, {r.pa, r.pb}));
  }
  const auto again = solve_forward(BlockKernelOp::from_model(m), g, o.dt, exo, rho);
  ASSERT_EQ(again.fields.size(), path.fields.size());
  double diff = 0.0;
  for (std::size_t i = 0; i < again.fields.size(); ++i) {
    IntensityField d = again.fields[i];
    IntensityField neg = path.fields[i];
    neg *= -1.0;
    d += neg;
    diff = std::max(diff, d.norm_d11(g));
    EXPECT_NEAR(again.beta[i][0], path.records[i].beta[0], 1e-12);
  }
  EXPECT_LE(diff, 1e-12);
  EXPECT_GT(path.fields.back().lam[kAskPlace][20], 0.0);
}

TEST(LimitSolver, SpreadStaysAboveDiscreteResolution) {
  const auto m = spread_model();
  SpatialGrid g(1.0, 3);
  const auto init = make_limit_state(g, 1.05, 1.0, {0.0, {}}, {0.0, {}});
  LimitOptions o = opts(1e-3, 1.0);
  o.cadence = 1000;
  std::size_t violations = 0;
  for (std::uint64_t r = 0; r < 40; ++r) violations += solve_path(m, g, init, o, 21, r).spread_violations;
  EXPECT_EQ(violations, 0u);
}

TEST(UniquenessCondition, CanonicalAndFailingInstances) {
  std::vector<PriceView> probes{{0.0, 0.0}, {0.0, 1.0}, {0.0, -3.0}};
  LimitModel ok;
  for (auto& s : ok.side) {
    s.rho = RateFamily::spread(10.0);
    s.varrho = RateFamily::constant(1.0);
  }
  EXPECT_TRUE(check_uniqueness_condition(ok, 0.5, probes).passed);
  LimitModel constant_rho = ok;
  for (auto& s : constant_rho.side) s.rho = RateFamily::constant(1.0);
  const auto r = check_uniqueness_condition(constant_rho, 0.5, probes);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.failures.empty());
  LimitModel no_varrho = ok;
  for (auto& s : no_varrho.side) s.varrho = RateFamily::constant(0.0);
  EXPECT_FALSE(check_uniqueness_condition(no_varrho, 0.5, probes).passed);
  EXPECT_THROW(check_uniqueness_condition(ok, 0.0, probes), std::invalid_argument);
}
