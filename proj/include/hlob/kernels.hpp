#pragma once

#include <vector>

namespace hlob {

/// Temporal factor c * t^power * exp(-kappa t), power in {0, 1}.
/// Covers the constant (power 0, kappa 0), exponential (power 0) and
/// gamma (power 1) families.
struct TemporalTerm {
  double c = 0.0;
  int power = 0;
  double kappa = 0.0;

  double operator()(double lag) const noexcept;
  /// Non-increasing function dominating |term| on [lag, inf).
  double envelope(double lag) const noexcept;
  /// Integral over [0, upto].
  double integral(double upto) const noexcept;
  /// (integral over [0, upto] of |term|^p)^(1/p), closed form.
  double lp_norm(double p, double upto) const noexcept;

  bool operator==(const TemporalTerm&) const = default;
};

/// Spatial factor. `One` is the constant 1; `Gaussian` is
/// amplitude * exp(-((x - center) / width)^2).
struct SpatialProfile {
  enum class Kind { One, Gaussian };
  Kind kind = Kind::One;
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;

  static SpatialProfile one() { return {}; }
  static SpatialProfile gaussian(double amplitude, double center, double width) {
    return {Kind::Gaussian, amplitude, center, width};
  }

  double operator()(double x) const noexcept;
  double sup() const noexcept;
  /// Integral over [lo, hi].
  double mass(double lo, double hi) const noexcept;
  /// L^p norm over [lo, hi].
  double lp_norm(double p, double lo, double hi) const noexcept;
  /// Draws from the normalized density restricted to [lo, hi] by inverse CDF.
  /// `u` is uniform on (0, 1).
  double sample(double lo, double hi, double u) const;

  bool operator==(const SpatialProfile&) const = default;
};

/// One separable term c * t^m e^{-kappa t} * target(x) * source(y). For scalar
/// targets (active intensities) the target factor is ignored; for scalar
/// sources (active events) the source factor is ignored.
struct KernelTerm {
  TemporalTerm time;
  SpatialProfile target;
  SpatialProfile source;

  double operator()(double lag, double x, double y) const noexcept {
    return time(lag) * target(x) * source(y);
  }
  bool operator==(const KernelTerm&) const = default;
};

struct SpaceTimeKernel {
  std::vector<KernelTerm> terms;

  bool empty() const noexcept { return terms.empty(); }
  double operator()(double lag, double x = 0.0, double y = 0.0) const noexcept;
  double envelope(double lag) const noexcept;
  /// True if every term has c >= 0.
  bool nonnegative() const noexcept;

  SpaceTimeKernel& operator+=(const SpaceTimeKernel& other);
  /// Multiplies every term by s.
  SpaceTimeKernel scaled(double s) const;
  bool operator==(const SpaceTimeKernel&) const = default;
};

SpaceTimeKernel operator+(SpaceTimeKernel a, const SpaceTimeKernel& b);

/// Markov state of a sum over past events of w * c * lag^m * e^{-kappa lag}.
/// s0 carries the exponential part, s1 the lag-weighted part (power 1 only).
class ErlangState {
 public:
  void decay(double h, double kappa) noexcept;
  void jump(double amount) noexcept { s0_ += amount; }
  double value(int power) const noexcept { return power == 0 ? s0_ : s1_; }
  /// Upper bound on value over all future times when no further jumps occur.
  double sup_ahead(int power, double kappa) const noexcept;

 private:
  double s0_ = 0.0;
  double s1_ = 0.0;
};

}  // namespace hlob
