#pragma once

#include <cstdint>
#include <random>

#include "byzlab/core/types.hpp"

namespace byzlab {

/// Deterministic random stream identified by (seed, stream id).
///
/// Two streams constructed from the same pair produce the same draw sequence,
/// independent of which thread owns them. Work items that need randomness get
/// their own substream instead of sharing one engine.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x5eedu};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream; the id is mixed so children of distinct parents do not collide.
  RngStream split(std::uint64_t child) const { return RngStream(seed_, mix(stream_id_, child)); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  VectorXd normal_vector(Eigen::Index n, double stddev = 1.0) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(0.0, stddev);
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace byzlab
