#pragma once

#include <cstdint>
#include <vector>

#include "fluctlab/model.hpp"
#include "fluctlab/rng.hpp"

namespace fluctlab {

// One-site moments of the invariant product measure.
struct Moments {
  double rho;     // <xi>
  double tau2;    // Var xi
  double v;       // <eta>
  double sigma2;  // Var eta
  double delta;   // Cov(eta, xi)
  double e;       // <V_b(eta)>
};

// xi_x is Gamma distributed with shape lambda + 1 and rate beta.
struct GammaLaw {
  double shape;
  double rate;
};

GammaLaw site_law(const ModelParams& params);

// Closed forms via digamma/trigamma.
Moments moments(const ModelParams& params);

// Adaptive Gauss-Kronrod integration against the one-site density.
// Throws std::runtime_error if the error estimate exceeds 1e-10 (relative).
Moments moments_by_quadrature(const ModelParams& params);

// Fills config with an iid draw from the invariant measure.
void sample_gibbs_into(const ModelParams& params, Rng& rng, Configuration& config);

// count independent configurations; replica r uses substream r of seed.
std::vector<Configuration> sample_gibbs(const ModelParams& params, std::size_t count,
                                        std::uint64_t seed);

}  // namespace fluctlab
