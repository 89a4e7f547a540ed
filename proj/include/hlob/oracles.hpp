#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hlob/limit.hpp"
#include "hlob/model.hpp"

namespace hlob {

/// dx = (a(t) - b(t) x) dt + sqrt(2 c(t) x) dB.
struct CIRParams {
  double x0 = 1.0;
  std::function<double(double)> a;
  std::function<double(double)> b;
  std::function<double(double)> c;
  std::optional<std::array<double, 3>> constants;  // set for constant coefficients

  static CIRParams constant(double x0, double a, double b, double c);
};

enum class CIRScheme { Euler, Exact };

struct CIRPath {
  std::vector<double> x;  // x[m] at t = m dt
  bool hit_zero = false;
  double min_value = 0.0;
};

/// Full-truncation Euler (coefficients at max(x, 0)) or, for constant
/// coefficients, exact noncentral chi-square transitions.
CIRPath simulate_cir(const CIRParams& p, double horizon, double dt, std::uint64_t seed, std::uint64_t replicate = 0,
                     CIRScheme scheme = CIRScheme::Euler);

/// One-step exact transition of the constant-coefficient process.
double cir_exact_step(double x, double a, double b, double c, double h, Rng& rng);

struct SpreadCoefficients {
  std::vector<double> t;
  std::vector<double> spread;
  std::vector<double> a, b, c;  // drift a - b s, diffusion sqrt(2 c s)
  std::size_t undefined = 0;    // records with spread <= 0
  std::size_t a_below_c = 0;    // records with a < c beyond rounding slack
  double fraction_a_ge_c = 1.0;
};

/// Rewrites the realized spread dynamics in square-root form from the records
/// of a limit path (rho_I / spread plays the role of c's multiplier).
SpreadCoefficients spread_reduction(const LimitModel& model, const LimitPath& path);

/// P = P(0) + int sqrt(P^2 mu) dB, mu = sigma2 + int phi(t - s) P^2 mu ds.
struct OneSidedParams {
  double sigma2 = 1.0;
  TemporalTerm phi;
  double p0 = 1.0;
  double price_cap = 3.0;  // |P| is clipped here inside the rates
};

struct ClusteringEstimate {
  double covariance = 0.0;
  double se = 0.0;
  double mean_sq_increment = 0.0;
  std::size_t replicates = 0;
  std::size_t barrier_hits = 0;  // replicates whose |P| reached the cap
};

/// Covariance of (Delta_eps log P(t))^2 and (Delta_eps log P(t + lag))^2 over
/// independent replicates, simulated in log price.
ClusteringEstimate one_sided_volatility_clustering(const OneSidedParams& p, double t, double eps, double lag,
                                                   std::size_t replicates, std::uint64_t seed, double dt = 1e-3,
                                                   unsigned threads = 1);

/// mu(t) = sigma2 exp(int_0^t (P^2 - kappa)) + kappa sigma2 int_0^t exp(int_s^t (P^2 - kappa)) ds
/// by nested trapezoid on the uniform grid of the P path.
std::vector<double> closed_form_mu_exponential(const std::vector<double>& p, double dt, double sigma2, double kappa);

/// V(t, x) = 1 + (V(0, x) - 1) exp(-e^{-x^2} int_0^t (P^2 + K * P^2)), K the
/// resolvent of the effective kernel. Rows are times m dt, columns the nodes.
std::vector<std::vector<double>> closed_form_book(const TemporalTerm& effective_kernel, const std::vector<double>& p,
                                                  double dt, const std::vector<double>& nodes,
                                                  const std::vector<double>& v0);

/// One-sided book with V' = lambda - lambda V and active/passive couplings
/// through phi and e^{-x^2}. `coupling` is the amplitude of the passive source
/// profile; sqrt(2/pi) makes the effective scalar kernel 2 phi.
LimitModel one_sided_book_model(const TemporalTerm& phi, double price_cap, double coupling);
double default_book_coupling();

/// One-sided price with rho = P^2 / 2 (so the diffusion is |P| sqrt(mu)) and
/// the active kernel phi.
LimitModel one_sided_intensity_model(double sigma2, const TemporalTerm& phi, double price_cap);

}  // namespace hlob
