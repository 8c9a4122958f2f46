#pragma once

#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

SpinSystem edgeless(int q, int n);
SpinSystem complete_graph(int q, int n, double beta);
SpinSystem cycle_graph(int q, int n, double beta);

// Uniform random simple d-regular graph via the pairing model with restarts.
SpinSystem random_regular_graph(int q, int n, int d, double beta, Rng& rng);

// Erdos-Renyi G(n, p) with couplings drawn uniformly from [beta_lo, beta_hi].
SpinSystem random_graph(int q, int n, double p, double beta_lo, double beta_hi, Rng& rng);

}  // namespace spinlab
