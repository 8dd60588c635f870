#pragma once

#include <cmath>
#include <cstdint>

namespace hawkesq {

// Counter-based generator (SplitMix64 finalizer over a keyed Weyl sequence).
// Streams are keyed by (seed, replication index, stream role) so replications
// are reproducible regardless of execution order or thread count.
class Rng {
 public:
  enum Role : std::uint64_t {
    kArrivals = 0x1,
    kService = 0x2,
    kThinning = 0x3,
    kGeneric = 0x4,
  };

  Rng(std::uint64_t seed, std::uint64_t rep = 0, std::uint64_t role = kGeneric)
      : key_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^
                 mix(rep * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL) ^
                 mix(role * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL))) {}

  std::uint64_t next_u64() {
    return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  // uniform on (0, 1), never exactly 0 or 1
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  double normal() {
    double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  double lognormal(double mu, double sigma) {
    return std::exp(mu + sigma * normal());
  }

  // index into a discrete distribution with the given weights (sum ~ 1)
  template <typename Weights>
  int pick(const Weights& w, int n) {
    double u = uniform(), acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u <= acc) return i;
    }
    return n - 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hawkesq
