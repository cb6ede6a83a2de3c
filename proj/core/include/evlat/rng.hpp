#pragma once

#include <cstdint>
#include <cmath>

namespace evlat {

// Counter-based generator: each output is a stateless mix of (key, counter),
// so identical seeds give bit-identical streams and per-worker substreams can
// be split without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x9e3779b97f4a7c15ull)), counter_(0) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // Shift u1 away from 0 so the log is finite.
    u1 = u1 <= 0.0 ? 0x1.0p-53 : u1;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double exponential(double rate) {
    double u = uniform();
    return -std::log1p(-u) / rate;
  }

  double gumbel() {
    double u = uniform();
    u = u <= 0.0 ? 0x1.0p-53 : u;
    return -std::log(-std::log(u));
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Independent substream derived from this generator's key (not its position).
  Rng split(std::uint64_t stream) const {
    Rng out(0);
    out.key_ = mix64(key_ ^ mix64(stream + 0x6a09e667f3bcc909ull));
    out.counter_ = 0;
    return out;
  }

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace evlat
