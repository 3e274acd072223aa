#pragma once

#include <cstdint>
#include <random>

namespace fluctlab {

// A seeded stream. Replica r of an ensemble uses Rng(seed, r); streams with
// different (seed, stream) pairs are seeded through splitmix64 and seed_seq
// so that nearby seeds do not produce correlated engines.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  engine_type& engine() { return engine_; }

  double uniform();                      // [0, 1)
  double normal();                       // N(0, 1)
  double exponential(double rate);
  double gamma(double shape, double rate);
  std::uint64_t poisson(double mean);
  std::size_t index(std::size_t n);      // uniform on {0, ..., n-1}

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace fluctlab
