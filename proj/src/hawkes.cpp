#include "hlob/hawkes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hlob {

namespace {

// Five-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                            0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {0.2369268850561891, 0.4786286704993665,
                                              0.5688888888888889, 0.4786286704993665,
                                              0.2369268850561891};

double excitation(const HawkesSpec& spec, const std::vector<Event>& events, std::size_t begin,
                  std::size_t end, double t, const Mark& u) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += spec.kernel.eval(t - events[i].t, u, events[i].u);
  return s;
}

Mark sample_mark(const MarkSpace& ms, Rng& rng) {
  Mark m;
  const double total = std::accumulate(ms.weights.begin(), ms.weights.end(), 0.0);
  double u = rng.uniform() * total;
  m.label = static_cast<int>(ms.weights.size()) - 1;
  for (std::size_t i = 0; i < ms.weights.size(); ++i) {
    if (u < ms.weights[i]) {
      m.label = static_cast<int>(i);
      break;
    }
    u -= ms.weights[i];
  }
  if (ms.spatial) m.x = -ms.half_width + 2.0 * ms.half_width * rng.uniform();
  return m;
}

}  // namespace

double MarkSpace::total_measure() const {
  const double w = std::accumulate(weights.begin(), weights.end(), 0.0);
  return spatial ? w * 2.0 * half_width : w;
}

void MarkSpace::validate() const {
  if (labels.empty()) throw std::invalid_argument("MarkSpace: label set is empty");
  if (weights.size() != labels.size())
    throw std::invalid_argument("MarkSpace: one base-measure weight per label required");
  for (double w : weights)
    if (!(w >= 0.0)) throw std::invalid_argument("MarkSpace: negative base-measure weight");
  if (spatial && !(half_width > 0.0))
    throw std::invalid_argument("MarkSpace: spatial half-width must be positive");
}

std::size_t EventStream::count(int label) const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                [label](const Event& e) { return e.u.label == label; }));
}

bool EventStream::operator==(const EventStream& o) const {
  if (horizon != o.horizon || events.size() != o.events.size()) return false;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& a = events[i];
    const auto& b = o.events[i];
    if (a.t != b.t || a.u.label != b.u.label || a.u.x != b.u.x || a.z != b.z) return false;
  }
  return true;
}

void validate(const HawkesSpec& spec) {
  spec.marks.validate();
  if (!spec.exogenous.rate || !spec.kernel.eval || !spec.kernel.envelope)
    throw std::invalid_argument("HawkesSpec: exogenous rate, kernel and envelope are required");
  if (!(spec.exogenous.sup >= 0.0)) throw std::invalid_argument("HawkesSpec: exogenous sup must be >= 0");
  const double bound = spec.exogenous.sup * spec.marks.total_measure() + spec.kernel.total_mass_bound;
  if (!(bound <= spec.c0 * (1.0 + 1e-12)))
    throw std::invalid_argument("HawkesSpec: exogenous mass plus kernel mass exceeds the declared C0");
}

double intensity_at(const HawkesSpec& spec, const std::vector<Event>& history, double t, const Mark& u) {
  for (const auto& e : history)
    if (e.t >= t) throw std::invalid_argument("intensity_at: history contains an event at or after t");
  return spec.exogenous.rate(t, u) + excitation(spec, history, 0, history.size(), t, u);
}

EventStream simulate_thinning(const HawkesSpec& spec, double horizon, Rng& rng) {
  validate(spec);
  if (!(horizon >= 0.0)) throw std::invalid_argument("simulate_thinning: negative horizon");
  EventStream out;
  out.horizon = horizon;
  auto& ev = out.events;
  const double mass = spec.marks.total_measure();
  const double eps = spec.effective_truncation();
  std::size_t start = 0;
  double t = 0.0;
  while (true) {
    while (start < ev.size() && spec.kernel.envelope(t - ev[start].t) < eps) ++start;
    double bound = spec.exogenous.sup;
    for (std::size_t i = start; i < ev.size(); ++i) bound += spec.kernel.envelope(t - ev[i].t);
    if (bound <= 0.0 || mass <= 0.0) break;
    t += rng.exponential(bound * mass);
    if (t > horizon) break;
    const Mark u = sample_mark(spec.marks, rng);
    const double lambda = spec.exogenous.rate(t, u) + excitation(spec, ev, start, ev.size(), t, u);
    if (lambda > bound * (1.0 + 1e-9))
      throw std::logic_error("simulate_thinning: intensity exceeds the majorant; envelope declaration is invalid");
    if (rng.uniform() * bound <= lambda) ev.push_back({t, u, 0.0});
  }
  return out;
}

EventStream simulate_thinning(const HawkesSpec& spec, double horizon, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_thinning(spec, horizon, rng);
}

double compensated_integral(const HawkesSpec& spec, const EventStream& stream,
                            const std::function<double(double, const Mark&)>& f,
                            const QuadratureOptions& opts) {
  const auto& ev = stream.events;
  double jumps = 0.0;
  for (const auto& e : ev) jumps += f(e.t, e.u);

  const auto& ms = spec.marks;
  // Integrand over the mark space at time t, with the first `n` events as history.
  auto mark_integral = [&](double t, std::size_t n) {
    double total = 0.0;
    for (std::size_t l = 0; l < ms.labels.size(); ++l) {
      if (ms.weights[l] == 0.0) continue;
      Mark u{static_cast<int>(l), 0.0};
      if (!ms.spatial) {
        total += ms.weights[l] * f(t, u) * (spec.exogenous.rate(t, u) + excitation(spec, ev, 0, n, t, u));
        continue;
      }
      const double panel = 2.0 * ms.half_width / opts.spatial_panels;
      double sx = 0.0;
      for (int p = 0; p < opts.spatial_panels; ++p) {
        const double mid = -ms.half_width + (p + 0.5) * panel;
        for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
          u.x = mid + 0.5 * panel * kGlNodes[q];
          sx += kGlWeights[q] * 0.5 * panel * f(t, u) *
                (spec.exogenous.rate(t, u) + excitation(spec, ev, 0, n, t, u));
        }
      }
      total += ms.weights[l] * sx;
    }
    return total;
  };

  double comp = 0.0;
  double left = 0.0;
  for (std::size_t k = 0; k <= ev.size(); ++k) {
    const double right = k < ev.size() ? ev[k].t : stream.horizon;
    const double len = right - left;
    if (len > 0.0) {
      const int panels = std::max(1, static_cast<int>(std::ceil(len / opts.max_panel)));
      const double h = len / panels;
      for (int p = 0; p < panels; ++p) {
        const double mid = left + (p + 0.5) * h;
        for (std::size_t q = 0; q < kGlNodes.size(); ++q)
          comp += kGlWeights[q] * 0.5 * h * mark_integral(mid + 0.5 * h * kGlNodes[q], k);
      }
    }
    left = right;
  }
  return jumps - comp;
}

double quadratic_variation(const EventStream& stream, const std::function<double(double, const Mark&)>& f) {
  double s = 0.0;
  for (const auto& e : stream.events) {
    const double v = f(e.t, e.u);
    s += v * v;
  }
  return s;
}

ScalarKernel zero_kernel() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, 0.0, std::pair{0.0, 1.0}};
}

ScalarKernel exponential_kernel(double mass, double beta) {
  if (!(mass >= 0.0) || !(beta > 0.0))
    throw std::invalid_argument("exponential_kernel: need mass >= 0 and beta > 0");
  auto f = [mass, beta](double t) { return t < 0.0 ? 0.0 : mass * beta * std::exp(-beta * t); };
  auto env = [mass, beta](double t) { return mass * beta * std::exp(-beta * std::max(t, 0.0)); };
  return {f, env, mass, std::pair{mass, beta}};
}

RateFn constant_rate(double value) {
  if (!(value >= 0.0)) throw std::invalid_argument("constant_rate: negative rate");
  return {[value](double) { return value; }, value, value};
}

HawkesSpec make_multivariate(std::size_t d, const std::vector<RateFn>& mu,
                             const std::vector<std::vector<ScalarKernel>>& phi) {
  if (d == 0) throw std::invalid_argument("make_multivariate: dimension must be positive");
  if (mu.size() != d || phi.size() != d)
    throw std::invalid_argument("make_multivariate: dimension mismatch");
  for (const auto& row : phi)
    if (row.size() != d) throw std::invalid_argument("make_multivariate: dimension mismatch");

  HawkesSpec spec;
  for (std::size_t i = 0; i < d; ++i) spec.marks.labels.push_back(std::to_string(i + 1));
  spec.marks.weights.assign(d, 1.0);

  double sup = 0.0;
  for (const auto& m : mu) {
    sup = std::max(sup, m.sup);
  }
  spec.exogenous.sup = sup;
  spec.exogenous.rate = [mu](double t, const Mark& u) { return mu[static_cast<std::size_t>(u.label)].rate(t); };

  spec.kernel.eval = [phi](double lag, const Mark& u, const Mark& v) {
    if (lag < 0.0) return 0.0;
    return phi[static_cast<std::size_t>(u.label)][static_cast<std::size_t>(v.label)].eval(lag);
  };
  spec.kernel.envelope = [phi](double lag) {
    double m = 0.0;
    for (const auto& row : phi)
      for (const auto& k : row) m = std::max(m, k.envelope(lag));
    return m;
  };
  double col_max = 0.0;
  for (std::size_t v = 0; v < d; ++v) {
    double col = 0.0;
    for (std::size_t u = 0; u < d; ++u) col += phi[u][v].l1;
    col_max = std::max(col_max, col);
  }
  spec.kernel.total_mass_bound = col_max;
  // The majorant uses sup mu on every label, so the bound is taken with that.
  spec.c0 = sup * static_cast<double>(d) + col_max;

  // Record the Markov structure when every kernel shares a single decay rate.
  bool markov = std::all_of(mu.begin(), mu.end(), [](const RateFn& r) { return r.constant.has_value(); });
  std::optional<double> beta;
  for (const auto& row : phi) {
    for (const auto& k : row) {
      if (!k.exponential) {
        markov = false;
      } else if (k.exponential->first > 0.0) {
        if (beta && *beta != k.exponential->second) markov = false;
        beta = k.exponential->second;
      }
    }
  }
  if (markov) {
    ExponentialStructure es;
    es.beta = beta.value_or(1.0);
    es.phi.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t u = 0; u < d; ++u) {
      es.mu.push_back(*mu[u].constant);
      for (std::size_t v = 0; v < d; ++v) es.phi[u][v] = phi[u][v].exponential->first;
    }
    spec.exponential = es;
  }
  return spec;
}

ExponentialMarkovSimulator::ExponentialMarkovSimulator(ExponentialStructure structure)
    : s_(std::move(structure)), excitation_(s_.mu.size(), 0.0) {
  const std::size_t d = s_.mu.size();
  if (d == 0 || s_.phi.size() != d) throw std::invalid_argument("ExponentialMarkovSimulator: dimension mismatch");
  if (!(s_.beta > 0.0)) throw std::invalid_argument("ExponentialMarkovSimulator: beta must be positive");
}

EventStream ExponentialMarkovSimulator::run(double horizon, Rng& rng) {
  const std::size_t d = s_.mu.size();
  std::fill(excitation_.begin(), excitation_.end(), 0.0);
  EventStream out;
  out.horizon = horizon;
  const double mu_total = std::accumulate(s_.mu.begin(), s_.mu.end(), 0.0);
  double t = 0.0;
  double exc_total = 0.0;
  while (true) {
    // Total intensity only decays until the next event, so its current value
    // dominates the path up to then.
    const double bound = mu_total + exc_total;
    if (bound <= 0.0) break;
    const double dt = rng.exponential(bound);
    t += dt;
    if (t > horizon) break;
    const double decay = std::exp(-s_.beta * dt);
    exc_total = 0.0;
    for (auto& e : excitation_) {
      e *= decay;
      exc_total += e;
    }
    const double lambda = mu_total + exc_total;
    double u = rng.uniform() * bound;
    if (u > lambda) continue;
    std::size_t label = d - 1;
    for (std::size_t i = 0; i < d; ++i) {
      const double li = s_.mu[i] + excitation_[i];
      if (u < li) {
        label = i;
        break;
      }
      u -= li;
    }
    out.events.push_back({t, Mark{static_cast<int>(label), 0.0}, 0.0});
    exc_total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      excitation_[i] += s_.beta * s_.phi[i][label];
      exc_total += excitation_[i];
    }
  }
  return out;
}

ExponentialMarkovSimulator make_exponential_markov(const HawkesSpec& spec) {
  if (!spec.exponential)
    throw std::invalid_argument("make_exponential_markov: kernel is not separable exponential");
  return ExponentialMarkovSimulator(*spec.exponential);
}

}  // namespace hlob
