#include "mmorder/random.hpp"

#include <cmath>

namespace mmorder {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::substream(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t index) {
  std::uint64_t key = mix64(seed);
  key = mix64(key ^ mix64(stream + 0x632be59bd9b4e019ULL));
  key = mix64(key ^ index);
  return RandomStream(key);
}

double RandomStream::uniform() {
  // (k + 0.5) / 2^53 lies strictly inside (0, 1).
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

}  // namespace mmorder
