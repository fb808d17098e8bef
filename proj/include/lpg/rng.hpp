#pragma once

#include <cstdint>
#include <cmath>

namespace lpg {

/// Counter-based random stream. Every draw is a pure hash of
/// (seed, stream, counter), so sampling is order-independent and
/// reproducible across platforms and thread counts.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  /// Uniform double in [0, 1) for counter value `ctr`.
  double uniform(std::uint64_t ctr) const {
    return to_unit(mix3(seed_, stream_, ctr));
  }

  /// Uniform for a two-component counter, e.g. an (i, j) edge index.
  double uniform(std::uint64_t a, std::uint64_t b) const {
    return to_unit(mix3(seed_, stream_, mix2(a, b)));
  }

  /// Standard normal via Box-Muller on two counter draws.
  double gaussian(std::uint64_t ctr) const {
    double u1 = to_unit_open(mix3(seed_, stream_, mix2(ctr, 0x9e3779b9ULL)));
    double u2 = to_unit(mix3(seed_, stream_, mix2(ctr, 0x85ebca6bULL)));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t bits(std::uint64_t ctr) const {
    return mix3(seed_, stream_, ctr);
  }

  /// Derive a child seed, e.g. per-trial seeds from a master seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
    return mix3(seed, a, b);
  }

private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
    return splitmix(splitmix(a) ^ (b + 0x9e3779b97f4a7c15ULL));
  }
  static std::uint64_t mix3(std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
    return splitmix(mix2(a, b) ^ splitmix(c + 0xd1b54a32d192ed03ULL));
  }
  static double to_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }
  // (0, 1]: safe as a log() argument.
  static double to_unit_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// Fixed stream tags so different sampling purposes never collide.
namespace stream {
constexpr std::uint64_t kLatent = 1;
constexpr std::uint64_t kLabel = 2;
constexpr std::uint64_t kEdge = 3;
constexpr std::uint64_t kOptimizer = 4;
constexpr std::uint64_t kBayesMc = 5;
}  // namespace stream

}  // namespace lpg
