#ifndef LATENT_EMBED_RNG_HPP
#define LATENT_EMBED_RNG_HPP

#include <cstdint>
#include <random>

namespace latent_embed {

/// Seedable generator with platform-independent output.
///
/// Bits come from std::mt19937_64, whose sequence is fixed by the standard.
/// The distributions are implemented here instead of with <random>'s
/// distribution classes, which are allowed to differ between standard
/// libraries: uniform reals take the top 53 bits, integers use rejection
/// sampling, normals use the Box-Muller transform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi].
  double uniform(double lo, double hi);
  /// Uniform integer on [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer; derives independent stream seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace latent_embed

#endif  // LATENT_EMBED_RNG_HPP
