#include "hlob/model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hlob {

namespace {

constexpr std::array<const char*, 4> kActiveNames = {"aM", "aL", "bM", "bL"};
constexpr std::array<const char*, 4> kPassiveNames = {"aL", "aC", "bL", "bC"};

double lp_on_grid(const std::vector<double>& f, double h, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = (i == 0 || i + 1 == f.size()) ? 0.5 * h : h;
    s += w * std::pow(std::abs(f[i]), p);
  }
  return std::pow(s, 1.0 / p);
}

}  // namespace

const char* active_name(int type) { return kActiveNames.at(static_cast<std::size_t>(type)); }
const char* passive_name(int type) { return kPassiveNames.at(static_cast<std::size_t>(type)); }

int parse_active(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kActiveNames[static_cast<std::size_t>(i)]) return i;
  throw std::invalid_argument("unknown active event type '" + s + "' (expected aM, aL, bM or bL)");
}

int parse_passive(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kPassiveNames[static_cast<std::size_t>(i)]) return i;
  throw std::invalid_argument("unknown passive event type '" + s + "' (expected aL, aC, bL or bC)");
}

double RateFamily::operator()(const PriceView& p, Side s) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Spread:
      return std::min(cap, std::max(0.0, p.spread()));
    case Kind::PriceSquared: {
      const double x = p.own(s);
      return value * std::min(x * x, cap * cap);
    }
  }
  return 0.0;
}

double RateFamily::sup() const {
  switch (kind) {
    case Kind::Constant:
      return std::abs(value);
    case Kind::Spread:
      return cap;
    case Kind::PriceSquared:
      return std::abs(value) * cap * cap;
  }
  return 0.0;
}

double RateFamily::lipschitz() const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::Spread:
      return 2.0;  // one unit per price coordinate
    case Kind::PriceSquared:
      return 2.0 * std::abs(value) * cap;
  }
  return 0.0;
}

bool RateFamily::capped(const PriceView& p, Side s) const {
  if (kind != Kind::PriceSquared) return false;
  return std::abs(p.own(s)) > cap;
}

double SizeMeasure::alpha_place() const {
  switch (kind) {
    case Kind::Dirac:
      return std::expm1(p1);
    case Kind::Exponential:
      return 1.0 / (p1 - 1.0);
    case Kind::LogNormal:
      return std::exp(p1 + 0.5 * p2 * p2);
  }
  return 0.0;
}

double SizeMeasure::alpha_cancel() const {
  switch (kind) {
    case Kind::Dirac:
      return std::expm1(-p1);
    case Kind::Exponential:
      return -1.0 / (p1 + 1.0);
    case Kind::LogNormal: {
      // -E[Y / (1 + Y)] with Y = exp(m + s Z), Z standard normal.
      const double m = p1, s = p2;
      auto integrand = [m, s](double z) {
        const double y = std::exp(m + s * z);
        return -y / (1.0 + y) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      };
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 8, 1e-13);
    }
  }
  return 0.0;
}

double SizeMeasure::fourth_moment() const {
  switch (kind) {
    case Kind::Dirac:
      return std::pow(std::expm1(p1), 4);
    case Kind::Exponential: {
      const double r = p1;
      return r / (r - 4.0) - 4.0 * r / (r - 3.0) + 6.0 * r / (r - 2.0) - 4.0 * r / (r - 1.0) + 1.0;
    }
    case Kind::LogNormal:
      return std::exp(4.0 * p1 + 8.0 * p2 * p2);
  }
  return 0.0;
}

double SizeMeasure::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Dirac:
      return p1;
    case Kind::Exponential:
      return rng.exponential(p1);
    case Kind::LogNormal:
      return std::log1p(std::exp(p1 + p2 * rng.normal()));
  }
  return 0.0;
}

void SizeMeasure::validate() const {
  switch (kind) {
    case Kind::Dirac:
      if (!(p1 >= 0.0) || !std::isfinite(p1)) throw std::invalid_argument("dirac size measure needs a finite z0 >= 0");
      break;
    case Kind::Exponential:
      if (!(p1 > 4.0))
        throw std::invalid_argument("exponential size measure needs rate > 4 for a finite fourth moment of e^z - 1");
      break;
    case Kind::LogNormal:
      if (!std::isfinite(p1) || !(p2 >= 0.0) || !std::isfinite(p2))
        throw std::invalid_argument("lognormal size measure needs finite m and s >= 0");
      break;
  }
}

double ProfileFn::operator()(double x) const {
  double v = base;
  for (const auto& b : bumps) v += b(x);
  return v;
}

void LimitModel::validate() const {
  for (const auto& s : side)
    for (const auto& nu : s.sizes) nu.validate();
  auto check_finite = [](const SpaceTimeKernel& k, const char* what) {
    for (const auto& t : k.terms) {
      if (!std::isfinite(t.time.c) || !(t.time.kappa >= 0.0))
        throw std::invalid_argument(std::string(what) + ": kernel coefficients must be finite with kappa >= 0");
      if (t.time.power == 1 && !(t.time.kappa > 0.0))
        throw std::invalid_argument(std::string(what) + ": gamma kernel needs kappa > 0");
      for (const auto* prof : {&t.target, &t.source})
        if (prof->kind == SpatialProfile::Kind::Gaussian && (!(prof->width > 0.0) || !(prof->amplitude >= 0.0)))
          throw std::invalid_argument(std::string(what) + ": gaussian profile needs width > 0 and amplitude >= 0");
    }
  };
  for (int I = 0; I < 2; ++I) {
    for (int j = 0; j < 4; ++j) {
      check_finite(phi[I][j], "phi");
      check_finite(theta[I][j], "theta");
      check_finite(Phi[I][j], "Phi");
      check_finite(Theta[I][j], "Theta");
      if (!phi[I][j].nonnegative() || !Phi[I][j].nonnegative())
        throw std::invalid_argument("phi and Phi kernels must be nonnegative");
    }
  }
  for (int K = 0; K < 4; ++K) {
    for (int j = 0; j < 4; ++j) {
      check_finite(psi[K][j], "psi");
      check_finite(Psi[K][j], "Psi");
      if (!psi[K][j].nonnegative() || !Psi[K][j].nonnegative())
        throw std::invalid_argument("psi and Psi kernels must be nonnegative");
    }
  }
  for (const auto& s : side) {
    for (const auto* r : {&s.rho, &s.varrho, &s.mu_hat}) {
      if (r->kind == RateFamily::Kind::Constant && r->value < 0.0)
        throw std::invalid_argument("rho, varrho and mu_hat must be nonnegative");
      if (r->kind == RateFamily::Kind::PriceSquared && r->value < 0.0)
        throw std::invalid_argument("price_squared scale must be nonnegative");
    }
    for (const auto& lh : s.lambda_hat) {
      if (lh.multiplier.kind == RateFamily::Kind::Constant && lh.multiplier.value < 0.0)
        throw std::invalid_argument("lambda_hat multiplier must be nonnegative");
      if (lh.profile.kind == SpatialProfile::Kind::Gaussian && !(lh.profile.width > 0.0 && lh.profile.amplitude >= 0.0))
        throw std::invalid_argument("lambda_hat profile needs width > 0 and amplitude >= 0");
    }
  }
}

std::vector<std::string> check_conditions(const LimitModel& model, const Bounds& bounds, double half_width,
                                          double horizon, const std::vector<PriceView>& probes) {
  std::vector<std::string> warnings;
  const double c0 = bounds.c0;
  auto warn = [&](const std::string& s) { warnings.push_back(s); };
  const int n = 801;
  const double h = 2.0 * half_width / (n - 1);
  const double eps = 4.0 * h;
  auto lp_checks = [&](const std::string& what, const std::function<double(double)>& f) {
    std::vector<double> v(n), shifted(n);
    for (int i = 0; i < n; ++i) {
      const double x = -half_width + i * h;
      v[static_cast<std::size_t>(i)] = f(x);
      shifted[static_cast<std::size_t>(i)] = f(x + eps) - f(x);
    }
    for (double p : {1.0, 2.0, 4.0}) {
      const double norm = lp_on_grid(v, h, p);
      if (norm > c0) {
        std::ostringstream os;
        os << what << ": L^" << p << " norm " << norm << " exceeds C0 = " << c0;
        warn(os.str());
      }
      const double shift = lp_on_grid(shifted, h, p);
      if (shift > bounds.lipschitz * eps * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << what << ": L^" << p << " shift difference " << shift << " exceeds lipschitz * eps = "
           << bounds.lipschitz * eps;
        warn(os.str());
      }
    }
  };

  for (int I = 0; I < 2; ++I) {
    const Side s = static_cast<Side>(I);
    const auto& sm = model.side[static_cast<std::size_t>(I)];
    const char* sn = I == 0 ? "ask" : "bid";
    for (const auto& p : probes) {
      const double total = sm.rho(p, s) + std::abs(sm.varrho(p, s)) + sm.mu_hat(p, s) + std::abs(sm.beta_hat(p, s));
      if (total > c0) {
        std::ostringstream os;
        os << sn << ": |rho| + |varrho| + |mu_hat| + |beta_hat| = " << total << " exceeds C0 = " << c0
           << " at (ask, bid) = (" << p.ask << ", " << p.bid << ")";
        warn(os.str());
      }
    }
    for (int K = 0; K < 2; ++K) {
      const auto& lh = sm.lambda_hat[static_cast<std::size_t>(K)];
      for (const auto& p : probes) {
        const double m = lh.multiplier(p, s);
        lp_checks(std::string("lambda_hat ") + passive_name(2 * I + K),
                  [&lh, m](double x) { return m * lh.profile(x); });
      }
    }
  }
  // Kernels at a few time lags; the sup over y of the passive-target kernels
  // is attained at the Gaussian centers, so probing y on a coarse grid suffices.
  const std::vector<double> lags = {0.0, 0.25 * horizon, 0.5 * horizon, horizon};
  for (int K = 0; K < 4; ++K) {
    for (int j = 0; j < 4; ++j) {
      const auto& ps = model.psi[static_cast<std::size_t>(K)][static_cast<std::size_t>(j)];
      const auto& Ps = model.Psi[static_cast<std::size_t>(K)][static_cast<std::size_t>(j)];
      for (double t : lags) {
        if (!ps.empty())
          lp_checks(std::string("psi ") + passive_name(K) + "<-" + active_name(j),
                    [&ps, t](double x) { return ps(t, x, 0.0); });
        if (!Ps.empty()) {
          for (double y : {-half_width, -0.5 * half_width, 0.0, 0.5 * half_width, half_width})
            lp_checks(std::string("Psi ") + passive_name(K) + "<-" + passive_name(j),
                      [&Ps, t, y](double x) { return Ps(t, x, y); });
        }
      }
    }
  }
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
  return warnings;
}

double passive_mass_coverage(const LimitModel& model, double half_width) {
  double worst = 1.0;
  for (const auto& s : model.side) {
    for (const auto& lh : s.lambda_hat) {
      const auto& pr = lh.profile;
      if (pr.kind != SpatialProfile::Kind::Gaussian || pr.amplitude == 0.0) continue;
      const double inside = pr.mass(-half_width, half_width);
      const double total = std::sqrt(std::numbers::pi) * pr.width * pr.amplitude;
      worst = std::min(worst, inside / total);
    }
  }
  return worst;
}

}  // namespace hlob
