#pragma once

#include <cstdint>
#include <random>

namespace mmorder {

/// Caller-owned source of randomness handed to samplers.
///
/// Wraps std::mt19937_64 and produces uniforms and normals with fixed
/// algorithms (not the implementation-defined std:: distributions), so a
/// given seed yields the same draws on every standard library.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (seed, stream, index). Used for Monte Carlo
  /// replicates so that serial and parallel runs draw identical numbers.
  static RandomStream substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal (Marsaglia polar method).
  double normal();

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace mmorder
