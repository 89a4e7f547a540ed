#include "hlob/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "hlob/rng.hpp"
#include "hlob/stats.hpp"
#include "hlob/volterra.hpp"

namespace hlob {

CIRParams CIRParams::constant(double x0, double a, double b, double c) {
  CIRParams p;
  p.x0 = x0;
  p.a = [a](double) { return a; };
  p.b = [b](double) { return b; };
  p.c = [c](double) { return c; };
  p.constants = std::array<double, 3>{a, b, c};
  return p;
}

double cir_exact_step(double x, double a, double b, double c, double h, Rng& rng) {
  if (c == 0.0) {
    if (b == 0.0) return x + a * h;
    return a / b + (x - a / b) * std::exp(-b * h);
  }
  const double k = b == 0.0 ? 0.5 * c * h : c * -std::expm1(-b * h) / (2.0 * b);
  const double dof = 2.0 * a / c;
  const double lambda = x * std::exp(-b * h) / k;
  const auto n = rng.poisson(0.5 * lambda);
  const double shape = 0.5 * dof + static_cast<double>(n);
  if (shape <= 0.0) return 0.0;
  return k * 2.0 * rng.gamma(shape);
}

CIRPath simulate_cir(const CIRParams& p, double horizon, double dt, std::uint64_t seed, std::uint64_t replicate,
                     CIRScheme scheme) {
  if (!(p.x0 > 0.0)) throw std::invalid_argument("simulate_cir: x0 must be positive");
  if (!(dt > 0.0) || !(horizon >= 0.0)) throw std::invalid_argument("simulate_cir: dt must be positive");
  if (scheme == CIRScheme::Exact && !p.constants)
    throw std::invalid_argument("simulate_cir: exact sampling needs constant coefficients");
  if (scheme == CIRScheme::Euler && (!p.a || !p.b || !p.c))
    throw std::invalid_argument("simulate_cir: coefficient functions missing");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  Rng rng(seed, replicate, StreamRole::Noise);
  CIRPath out;
  out.x.reserve(steps + 1);
  out.x.push_back(p.x0);
  out.min_value = p.x0;
  double x = p.x0;
  const double sd = std::sqrt(dt);
  for (std::size_t m = 0; m < steps; ++m) {
    if (scheme == CIRScheme::Exact) {
      const auto& k = *p.constants;
      x = cir_exact_step(x, k[0], k[1], k[2], dt, rng);
    } else {
      const double t = static_cast<double>(m) * dt;
      const double xp = std::max(x, 0.0);
      x += (p.a(t) - p.b(t) * xp) * dt + std::sqrt(2.0 * std::max(0.0, p.c(t)) * xp) * sd * rng.normal();
    }
    out.x.push_back(x);
    out.min_value = std::min(out.min_value, x);
    if (x <= 0.0) out.hit_zero = true;
  }
  return out;
}

SpreadCoefficients spread_reduction(const LimitModel& model, const LimitPath& path) {
  SpreadCoefficients r;
  std::size_t defined = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& rec : path.records) {
    const double s = rec.pa - rec.pb;
    r.t.push_back(rec.t);
    r.spread.push_back(s);
    if (!(s > 0.0)) {
      ++r.undefined;
      r.a.push_back(nan);
      r.b.push_back(nan);
      r.c.push_back(nan);
      continue;
    }
    const PriceView pv{rec.pa, rec.pb};
    double a = 0.0, b = 0.0, c = 0.0;
    for (int I = 0; I < 2; ++I) {
      const auto i = static_cast<std::size_t>(I);
      const double vr = model.side[i].varrho(pv, static_cast<Side>(I));
      const double rho_hat = rec.rho[i] / s;
      a += vr * rec.mu[i];
      b -= rho_hat * rec.beta[i];
      c += rho_hat * rec.mu[i];
    }
    r.a.push_back(a);
    r.b.push_back(b);
    r.c.push_back(c);
    ++defined;
    if (a < c - 1e-12 * std::max(1.0, std::abs(c))) ++r.a_below_c;
  }
  r.fraction_a_ge_c = defined == 0 ? 1.0 : 1.0 - static_cast<double>(r.a_below_c) / static_cast<double>(defined);
  return r;
}

namespace {

struct ClusteringSample {
  double x1 = 0.0;
  double x2 = 0.0;
  bool hit = false;
};

ClusteringSample clustering_replicate(const OneSidedParams& p, std::size_t i_t, std::size_t i_te, std::size_t i_r,
                                      std::size_t i_re, double dt, std::uint64_t seed, std::uint64_t rep) {
  Rng rng(seed, rep, StreamRole::Noise);
  ErlangState hist;
  double y = std::log(p.p0);
  const double cap2 = p.price_cap * p.price_cap;
  const double sd = std::sqrt(dt);
  double y_t = 0.0, y_r = 0.0;
  ClusteringSample out;
  for (std::size_t m = 0;; ++m) {
    if (m == i_t) y_t = y;
    if (m == i_te) out.x1 = (y - y_t) * (y - y_t);
    if (m == i_r) y_r = y;
    if (m == i_re) {
      out.x2 = (y - y_r) * (y - y_r);
      break;
    }
    const double p2 = std::exp(2.0 * y);
    const double p2c = std::min(p2, cap2);
    if (p2 > cap2) out.hit = true;
    const double mu = p.sigma2 + p.phi.c * hist.value(p.phi.power);
    const double vol2 = p2 > cap2 ? cap2 * mu / p2 : mu;
    y += -0.5 * vol2 * dt + std::sqrt(vol2) * sd * rng.normal();
    hist.jump(p2c * mu * dt);
    hist.decay(dt, p.phi.kappa);
  }
  return out;
}

}  // namespace

ClusteringEstimate one_sided_volatility_clustering(const OneSidedParams& p, double t, double eps, double lag,
                                                   std::size_t replicates, std::uint64_t seed, double dt,
                                                   unsigned threads) {
  if (!(p.p0 > 0.0)) throw std::invalid_argument("one_sided_volatility_clustering: P(0) must be positive");
  if (!(eps > 0.0) || !(lag >= 0.0) || !(t >= 0.0) || !(dt > 0.0))
    throw std::invalid_argument("one_sided_volatility_clustering: invalid time arguments");
  if (replicates < 2) throw std::invalid_argument("one_sided_volatility_clustering: need at least 2 replicates");
  if (p.phi.c < 0.0) throw std::invalid_argument("one_sided_volatility_clustering: kernel must be nonnegative");
  auto idx = [dt](double x) { return static_cast<std::size_t>(std::llround(x / dt)); };
  const std::size_t i_t = idx(t), i_te = idx(t + eps), i_r = idx(t + lag), i_re = idx(t + lag + eps);
  if (i_te == i_t) throw std::invalid_argument("one_sided_volatility_clustering: eps below the step size");

  std::vector<ClusteringSample> samples(replicates);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(replicates)));
  auto work = [&](unsigned w) {
    for (std::size_t r = w; r < replicates; r += workers)
      samples[r] = clustering_replicate(p, i_t, i_te, i_r, i_re, dt, seed, r);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  std::vector<double> x1(replicates), x2(replicates);
  ClusteringEstimate e;
  e.replicates = replicates;
  for (std::size_t r = 0; r < replicates; ++r) {
    x1[r] = samples[r].x1;
    x2[r] = samples[r].x2;
    if (samples[r].hit) ++e.barrier_hits;
  }
  const auto cov = stats::covariance(x1, x2);
  e.covariance = cov.estimate;
  e.se = cov.se;
  e.mean_sq_increment = stats::summarize(x1).mean;
  return e;
}

std::vector<double> closed_form_mu_exponential(const std::vector<double>& p, double dt, double sigma2, double kappa) {
  if (p.empty()) throw std::invalid_argument("closed_form_mu_exponential: empty path");
  const std::size_t n = p.size();
  // cumulative exponent I(t_m) = int_0^{t_m} (P^2 - kappa)
  std::vector<double> I(n, 0.0);
  for (std::size_t m = 1; m < n; ++m) I[m] = I[m - 1] + 0.5 * dt * (p[m - 1] * p[m - 1] + p[m] * p[m]) - kappa * dt;
  std::vector<double> mu(n);
  for (std::size_t m = 0; m < n; ++m) {
    double s = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 * dt : dt;
      s += w * std::exp(I[m] - I[j]);
    }
    if (m == 0) s = 0.0;
    mu[m] = sigma2 * std::exp(I[m]) + kappa * sigma2 * s;
  }
  return mu;
}

std::vector<std::vector<double>> closed_form_book(const TemporalTerm& effective_kernel, const std::vector<double>& p,
                                                  double dt, const std::vector<double>& nodes,
                                                  const std::vector<double>& v0) {
  if (p.empty()) throw std::invalid_argument("closed_form_book: empty path");
  if (nodes.size() != v0.size()) throw std::invalid_argument("closed_form_book: nodes and V(0) differ in size");
  const std::size_t n = p.size();
  const auto K = scalar_resolvent_K(effective_kernel, dt, n - 1).K;
  std::vector<double> q(n), mu(n);
  for (std::size_t m = 0; m < n; ++m) q[m] = p[m] * p[m];
  for (std::size_t m = 0; m < n; ++m) {
    double conv = 0.0;
    for (std::size_t j = 0; j <= m && m > 0; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 * dt : dt;
      conv += w * K[m - j] * q[j];
    }
    mu[m] = q[m] + conv;
  }
  std::vector<std::vector<double>> v(n, std::vector<double>(nodes.size()));
  double cum = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    if (m > 0) cum += 0.5 * dt * (mu[m - 1] + mu[m]);
    for (std::size_t j = 0; j < nodes.size(); ++j)
      v[m][j] = 1.0 + (v0[j] - 1.0) * std::exp(-std::exp(-nodes[j] * nodes[j]) * cum);
  }
  return v;
}

double default_book_coupling() { return std::sqrt(2.0 / std::numbers::pi); }

LimitModel one_sided_book_model(const TemporalTerm& phi, double price_cap, double coupling) {
  const auto g = SpatialProfile::gaussian(1.0, 0.0, 1.0);
  const auto src = SpatialProfile::gaussian(coupling, 0.0, 1.0);
  const TemporalTerm phi2{2.0 * phi.c, phi.power, phi.kappa};
  LimitModel m;
  auto& a = m.side[0];
  a.rho = RateFamily::constant(0.5);
  a.mu_hat = RateFamily::price_squared(1.0, price_cap);
  a.lambda_hat[0] = {RateFamily::price_squared(1.0, price_cap), g};
  a.lambda_hat[1] = {RateFamily::price_squared(2.0, price_cap), g};
  // e^{ln 2} - 1 = 1 and e^{-ln 2} - 1 = -1/2; with lambda_C = 2 lambda this
  // gives V' = lambda (1 - V).
  a.sizes[0] = SizeMeasure::dirac(std::log(2.0));
  a.sizes[1] = SizeMeasure::dirac(std::log(2.0));
  for (int src_type : {kAskMarket, kAskSpread}) {
    m.phi[0][src_type].terms.push_back({phi, {}, {}});
    m.psi[kAskPlace][src_type].terms.push_back({phi, g, {}});
    m.psi[kAskCancel][src_type].terms.push_back({phi2, g, {}});
  }
  m.Phi[0][kAskPlace].terms.push_back({phi, {}, src});
  m.Psi[kAskPlace][kAskPlace].terms.push_back({phi, g, src});
  m.Psi[kAskCancel][kAskPlace].terms.push_back({phi2, g, src});
  return m;
}

LimitModel one_sided_intensity_model(double sigma2, const TemporalTerm& phi, double price_cap) {
  LimitModel m;
  auto& a = m.side[0];
  a.rho = RateFamily::price_squared(0.5, price_cap);
  a.mu_hat = RateFamily::constant(sigma2);
  for (int src_type : {kAskMarket, kAskSpread}) m.phi[0][src_type].terms.push_back({phi, {}, {}});
  return m;
}

}  // namespace hlob
