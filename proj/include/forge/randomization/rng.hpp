#pragma once

#include <cstdint>
#include <random>

namespace forge {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Consumers that draw their own stream for a given index.
enum class StreamKind : std::uint64_t {
  kEpisode = 1,       // dynamics, initial state, fixed-pose error
  kObservation = 2,   // per-step sensor noise
  kPolicy = 3,        // action sampling
  kTrainer = 4,       // minibatch shuffling
  kEvaluation = 5,
};

/// Seed of stream (`kind`, `index`) under `master`: a pure function of its
/// arguments, so streams never depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, StreamKind kind, std::uint64_t index) {
  return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(kind))) + mix64(index + 0x5851f42d4c957f2dULL));
}

class RandomStream {
 public:
  using result_type = std::mt19937_64::result_type;

  RandomStream() : RandomStream(0) {}
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t master, StreamKind kind, std::uint64_t index)
      : engine_(derive_seed(master, kind, index)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double canonical() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [lo, hi); returns lo exactly when lo == hi.
  double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * canonical(); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double sigma) { return sigma == 0.0 ? mean : mean + sigma * normal_(engine_); }
  double gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace forge
