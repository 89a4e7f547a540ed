#include "hlob/kernels.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hlob {

double TemporalTerm::operator()(double lag) const noexcept {
  if (lag < 0.0) return 0.0;
  const double e = kappa == 0.0 ? 1.0 : std::exp(-kappa * lag);
  return power == 0 ? c * e : c * lag * e;
}

double TemporalTerm::envelope(double lag) const noexcept {
  lag = std::max(lag, 0.0);
  const double a = std::abs(c);
  if (power == 0) return kappa == 0.0 ? a : a * std::exp(-kappa * lag);
  if (kappa == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = 1.0 / kappa;
  if (lag <= peak) return a * peak * std::exp(-1.0);
  return a * lag * std::exp(-kappa * lag);
}

double TemporalTerm::integral(double upto) const noexcept {
  if (upto <= 0.0) return 0.0;
  if (power == 0) {
    if (kappa == 0.0) return c * upto;
    return c * (-std::expm1(-kappa * upto)) / kappa;
  }
  if (kappa == 0.0) return c * upto * upto / 2.0;
  return c * (1.0 - std::exp(-kappa * upto) * (1.0 + kappa * upto)) / (kappa * kappa);
}

double TemporalTerm::lp_norm(double p, double upto) const noexcept {
  if (upto <= 0.0 || c == 0.0) return 0.0;
  const double a = std::abs(c);
  double integral = 0.0;
  if (power == 0) {
    integral = kappa == 0.0 ? upto : -std::expm1(-p * kappa * upto) / (p * kappa);
  } else {
    // int_0^T t^p e^{-p kappa t} dt = gamma_lower(p+1, p kappa T) / (p kappa)^{p+1}
    if (kappa == 0.0) {
      integral = std::pow(upto, p + 1.0) / (p + 1.0);
    } else {
      const double r = p * kappa;
      integral = boost::math::tgamma_lower(p + 1.0, r * upto) / std::pow(r, p + 1.0);
    }
  }
  return a * std::pow(integral, 1.0 / p);
}

double SpatialProfile::operator()(double x) const noexcept {
  if (kind == Kind::One) return 1.0;
  const double z = (x - center) / width;
  return amplitude * std::exp(-z * z);
}

double SpatialProfile::sup() const noexcept {
  return kind == Kind::One ? 1.0 : std::abs(amplitude);
}

double SpatialProfile::mass(double lo, double hi) const noexcept {
  if (hi <= lo) return 0.0;
  if (kind == Kind::One) return hi - lo;
  const double s = std::sqrt(std::numbers::pi) / 2.0 * width * amplitude;
  const double a = (lo - center) / width;
  const double b = (hi - center) / width;
  // erfc differences keep precision in the upper tail.
  if (a > 0.0) return s * (std::erfc(a) - std::erfc(b));
  if (b < 0.0) return s * (std::erfc(-b) - std::erfc(-a));
  return s * (std::erf(b) - std::erf(a));
}

double SpatialProfile::lp_norm(double p, double lo, double hi) const noexcept {
  if (hi <= lo) return 0.0;
  if (kind == Kind::One) return std::pow(hi - lo, 1.0 / p);
  // |a|^p exp(-p z^2) is a Gaussian profile with width / sqrt(p).
  const SpatialProfile g = gaussian(1.0, center, width / std::sqrt(p));
  return std::abs(amplitude) * std::pow(g.mass(lo, hi), 1.0 / p);
}

double SpatialProfile::sample(double lo, double hi, double u) const {
  if (!(hi > lo)) throw std::invalid_argument("SpatialProfile::sample: empty interval");
  if (kind == Kind::One) return lo + u * (hi - lo);
  const double a = (lo - center) / width;
  const double b = (hi - center) / width;
  double z = 0.0;
  if (a > 0.0) {
    // Upper tail: work with erfc.
    const double ea = std::erfc(a), eb = std::erfc(b);
    z = boost::math::erfc_inv(ea - u * (ea - eb));
  } else if (b < 0.0) {
    const double ea = std::erfc(-a), eb = std::erfc(-b);
    z = -boost::math::erfc_inv(eb + u * (ea - eb));
  } else {
    const double ea = std::erf(a), eb = std::erf(b);
    z = boost::math::erf_inv(ea + u * (eb - ea));
  }
  return std::clamp(center + width * z, lo, hi);
}

double SpaceTimeKernel::operator()(double lag, double x, double y) const noexcept {
  double s = 0.0;
  for (const auto& t : terms) s += t(lag, x, y);
  return s;
}

double SpaceTimeKernel::envelope(double lag) const noexcept {
  double s = 0.0;
  for (const auto& t : terms) s += t.time.envelope(lag) * t.target.sup() * t.source.sup();
  return s;
}

bool SpaceTimeKernel::nonnegative() const noexcept {
  return std::all_of(terms.begin(), terms.end(), [](const KernelTerm& t) {
    return t.time.c >= 0.0 && t.target.amplitude >= 0.0 && t.source.amplitude >= 0.0;
  });
}

SpaceTimeKernel& SpaceTimeKernel::operator+=(const SpaceTimeKernel& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  return *this;
}

SpaceTimeKernel SpaceTimeKernel::scaled(double s) const {
  SpaceTimeKernel out = *this;
  for (auto& t : out.terms) t.time.c *= s;
  return out;
}

SpaceTimeKernel operator+(SpaceTimeKernel a, const SpaceTimeKernel& b) {
  a += b;
  return a;
}

void ErlangState::decay(double h, double kappa) noexcept {
  if (h <= 0.0) return;
  const double e = kappa == 0.0 ? 1.0 : std::exp(-kappa * h);
  s1_ = e * (s1_ + h * s0_);
  s0_ = e * s0_;
}

double ErlangState::sup_ahead(int power, double kappa) const noexcept {
  if (power == 0) return std::max(s0_, 0.0);
  if (s0_ <= 0.0 && s1_ <= 0.0) return 0.0;
  if (kappa == 0.0) return s0_ > 0.0 ? std::numeric_limits<double>::infinity() : s1_;
  if (s0_ <= 0.0) return std::max(s1_, 0.0);
  const double h = 1.0 / kappa - s1_ / s0_;
  if (h <= 0.0) return s1_;
  return std::exp(-kappa * h) * (s1_ + h * s0_);
}

}  // namespace hlob
