#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hlob/rng.hpp"

namespace hlob {

/// A point of the mark space: a label index plus an optional spatial coordinate.
struct Mark {
  int label = 0;
  double x = 0.0;
};

/// Finite label set, each label carrying a base-measure weight, optionally
/// crossed with the interval [-half_width, half_width] under Lebesgue measure.
struct MarkSpace {
  std::vector<std::string> labels;
  std::vector<double> weights;
  bool spatial = false;
  double half_width = 0.0;

  /// m(U): total base measure.
  double total_measure() const;
  void validate() const;
};

struct KernelFn {
  std::function<double(double lag, const Mark& u, const Mark& v)> eval;
  /// Non-increasing bound on eval(lag, ., .).
  std::function<double(double lag)> envelope;
  /// sup_v of the m(du)-integral of eval over all lags.
  double total_mass_bound = 0.0;
};

struct Exogenous {
  std::function<double(double t, const Mark& u)> rate;
  double sup = 0.0;
};

/// Present when the kernel is phi(u, v) * beta * exp(-beta t) with constant
/// exogenous rates on a finite label set; enables the Markov simulator.
struct ExponentialStructure {
  double beta = 0.0;
  std::vector<std::vector<double>> phi;  // phi[u][v]
  std::vector<double> mu;
};

struct HawkesSpec {
  MarkSpace marks;
  Exogenous exogenous;
  KernelFn kernel;
  double c0 = 0.0;
  /// Contributions whose envelope has fallen below this are dropped. Negative
  /// means the default 1e-12 * c0.
  double truncation_eps = -1.0;
  std::optional<ExponentialStructure> exponential;

  double effective_truncation() const { return truncation_eps >= 0.0 ? truncation_eps : 1e-12 * c0; }
};

struct Event {
  double t = 0.0;
  Mark u;
  double z = 0.0;
};

struct EventStream {
  std::vector<Event> events;
  double horizon = 0.0;

  std::size_t count(int label) const;
  bool operator==(const EventStream& o) const;
};

/// Checks the mark space and the bound m(U) * sup mu + kernel mass <= c0.
void validate(const HawkesSpec& spec);

/// mu(t, u) plus the kernel summed over the history.
double intensity_at(const HawkesSpec& spec, const std::vector<Event>& history, double t, const Mark& u);

EventStream simulate_thinning(const HawkesSpec& spec, double horizon, Rng& rng);
EventStream simulate_thinning(const HawkesSpec& spec, double horizon, std::uint64_t seed);

struct QuadratureOptions {
  double max_panel = 0.05;   // time panel length
  int spatial_panels = 64;   // Gauss-Legendre panels over the spatial interval
};

/// Integral of f against N minus its integral against lambda dt m(du).
double compensated_integral(const HawkesSpec& spec, const EventStream& stream,
                            const std::function<double(double, const Mark&)>& f,
                            const QuadratureOptions& opts = {});

/// Sum of f^2 over the events: the bracket of the compensated integral.
double quadratic_variation(const EventStream& stream, const std::function<double(double, const Mark&)>& f);

/// Scalar temporal kernel with envelope and L1 mass.
struct ScalarKernel {
  std::function<double(double)> eval;
  std::function<double(double)> envelope;
  double l1 = 0.0;
  /// Set for kernels of the form mass * beta * exp(-beta t).
  std::optional<std::pair<double, double>> exponential;  // (mass, beta)
};

ScalarKernel zero_kernel();
/// mass * beta * exp(-beta t).
ScalarKernel exponential_kernel(double mass, double beta);

struct RateFn {
  std::function<double(double)> rate;
  double sup = 0.0;
  std::optional<double> constant;
};
RateFn constant_rate(double value);

/// U = {0..d-1} with unit weights; lambda_i = mu_i + sum_j phi_ij * dN_j.
HawkesSpec make_multivariate(std::size_t d, const std::vector<RateFn>& mu,
                             const std::vector<std::vector<ScalarKernel>>& phi);

/// Simulator for separable exponential kernels. Intensities jump by
/// beta * phi(u, v) at events and decay exponentially in between.
class ExponentialMarkovSimulator {
 public:
  explicit ExponentialMarkovSimulator(ExponentialStructure structure);

  EventStream run(double horizon, Rng& rng);
  const std::vector<double>& excitation() const { return excitation_; }

 private:
  ExponentialStructure s_;
  std::vector<double> excitation_;
};

/// Throws std::invalid_argument when the spec has no exponential structure.
ExponentialMarkovSimulator make_exponential_markov(const HawkesSpec& spec);

}  // namespace hlob
