#include "hlob/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hlob {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t replicate,
                         std::uint64_t role) noexcept {
  std::uint64_t k = mix64(master_seed + kGolden);
  k = mix64(k ^ (replicate + 0x632BE59BD9B4E019ULL));
  k = mix64(k ^ (role * kGolden + 0x8CB92BA72F3D8DD7ULL));
  return k;
}

Rng::Rng(std::uint64_t master_seed, std::uint64_t replicate, StreamRole role) noexcept
    : key_(derive_key(master_seed, replicate, static_cast<std::uint64_t>(role))) {}

Rng Rng::from_key(std::uint64_t key) noexcept {
  Rng r;
  r.key_ = key;
  return r;
}

Rng::result_type Rng::operator()() noexcept {
  const std::uint64_t n = counter_++;
  return mix64(key_ + (n + 1) * kGolden);
}

double Rng::uniform() noexcept {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

double Rng::normal() noexcept {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double a = 2.0 * std::numbers::pi * uniform();
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(*this);
}

double Rng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(*this);
}

}  // namespace hlob
