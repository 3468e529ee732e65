#pragma once

// Convergence-rate certificates for finite-state Markov chains: contraction
// coefficients, coupling operators, spectral rates, comparison reports, and a
// seeded coupling simulator.

#include "mixbound/bounds.hpp"
#include "mixbound/chain.hpp"
#include "mixbound/coupling.hpp"
#include "mixbound/errors.hpp"
#include "mixbound/io.hpp"
#include "mixbound/rng.hpp"
#include "mixbound/simulate.hpp"
#include "mixbound/spectral.hpp"
