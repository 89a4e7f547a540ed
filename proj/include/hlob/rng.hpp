#pragma once

#include <cstdint>
#include <limits>

namespace hlob {

/// Named sub-streams of a replicate. Each role gets an independent stream.
enum class StreamRole : std::uint64_t {
  Events = 1,
  Marks = 2,
  Sizes = 3,
  Noise = 4,
  Bootstrap = 5,
  Aux = 6,
};

/// Pure key derivation: (master seed, replicate index, role) -> stream key.
std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t replicate,
                         std::uint64_t role) noexcept;

/// Counter-based generator. Output n is a bijective mix of (key, n), so any
/// stream position can be reproduced from the key alone and streams with
/// different keys never share state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t master_seed, std::uint64_t replicate = 0,
               StreamRole role = StreamRole::Events) noexcept;

  static Rng from_key(std::uint64_t key) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double exponential(double rate) noexcept;
  double normal() noexcept;
  std::uint64_t poisson(double mean);
  double gamma(double shape);

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  Rng() = default;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace hlob
