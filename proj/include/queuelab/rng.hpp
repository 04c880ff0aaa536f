#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "queuelab/core.hpp"
#include "queuelab/pgf.hpp"

namespace queuelab::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** (Blackman/Vigna), seeded through splitmix64. Pinned here so
// seeded runs reproduce bit-identically on every platform; never swap in a
// platform default engine.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  // Independent stream for replication r of a base seed.
  static Xoshiro256 for_replication(std::uint64_t seed, std::uint64_t r) {
    std::uint64_t sm = seed ^ (0x632be59bd9b4e019ULL * (r + 1));
    return Xoshiro256(splitmix64(sm));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  double erlang(std::size_t k, double mean) {
    double total = 0.0;
    const double stage_mean = mean / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) total += exponential(stage_mean);
    return total;
  }

  std::uint64_t poisson(double lambda) {
    // Knuth products for small means, halving for large ones.
    std::uint64_t total = 0;
    while (lambda > 30.0) {
      lambda *= 0.5;
      total += poisson(lambda);
    }
    const double limit = std::exp(-lambda);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return total + k;
  }

  std::uint64_t geometric(double p) {
    // Failures before the first success, success probability p.
    if (p >= 1.0) return 0;
    return static_cast<std::uint64_t>(std::floor(std::log1p(-uniform()) / std::log1p(-p)));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Nonnegative-integer sampler driven by a PGF description.
inline std::uint64_t sample_pgf(Xoshiro256& gen, const pgf::PGFSeries& g) {
  using Family = pgf::PGFSeries::Family;
  switch (g.family()) {
    case Family::kPoisson: return gen.poisson(g.param_a());
    case Family::kGeometric: return gen.geometric(g.param_a());
    case Family::kBernoulliQuadratic: {
      const double u = gen.uniform();
      if (u < g.param_a()) return 0;
      if (u < 1.0 - g.param_b()) return 1;
      return 2;
    }
    case Family::kDegenerate: return g.degenerate_at();
    case Family::kSeries: {
      if (g.tail_mass() > 1e-9) {
        throw DomainError("cannot sample a truncated PGF with material tail mass");
      }
      double u = gen.uniform();
      const auto& c = g.coefficients();
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (u < c[k]) return k;
        u -= c[k];
      }
      return c.empty() ? 0 : c.size() - 1;
    }
  }
  return 0;
}

}  // namespace queuelab::rng
