#pragma once

#include <random>

#include "arith/metalearn.hpp"
#include "arith/nn.hpp"

namespace arith {

/// Random MLP shape: 1-4 inputs, 0-2 hidden layers of 1-8 units, at most
/// `max_params` parameters. Classification specs get at least two outputs.
NetworkSpec random_network_spec(std::mt19937_64& rng, Activation activation, LossKind loss,
                                std::size_t max_params = 500);

/// Entries drawn from N(0, scale^2).
ParamVector random_params(std::size_t n, std::mt19937_64& rng, double scale = 1.0);
GradVector random_grad(std::size_t n, std::mt19937_64& rng, double scale = 1.0);

/// Standard-normal inputs with uniform class labels or N(0, 1) real targets.
Batch random_batch(const NetworkSpec& spec, std::size_t rows, std::mt19937_64& rng, int domain_id = 0);

/// Inner trace whose n displacements are random: thetas[i+1] = thetas[i] - g_i.
InnerTrace random_trace(const ParamVector& theta, std::size_t n, std::mt19937_64& rng, double scale = 0.1);

}  // namespace arith
