#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "arith/flat_vector.hpp"

namespace arith {

struct SgdConfig {
    double learning_rate = 0.1;
};

/// Momentum-free SGD: params - lr * grad. Stateless.
ParamVector sgd_step(const ParamVector& params, const GradVector& grad, const SgdConfig& cfg);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

struct AdamState {
    AdamConfig config;
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step_count = 0;

    AdamState() = default;
    AdamState(std::size_t n, AdamConfig cfg);

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Standard Adam with bias-corrected moments.
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const GradVector& grad,
                                            AdamState state);

/// Splits Adam's first moment by the domain each gradient came from:
/// every update decays all contributions by beta1 and adds (1 - beta1) * grad
/// to the updating domain, so the contributions always sum to m.
struct MomentumLedger {
    std::map<int, std::vector<double>> contributions;
    std::size_t dim = 0;
    std::int64_t updates = 0;

    MomentumLedger() = default;
    MomentumLedger(std::size_t dim, std::span<const int> domain_ids);

    /// Elementwise sum over domains, i.e. the first moment it decomposes.
    [[nodiscard]] std::vector<double> total() const;
};

MomentumLedger ledger_update(MomentumLedger ledger, const GradVector& grad, int domain_id,
                             double beta1);

/// L1 share of each domain's contribution.
std::map<int, double> ledger_fractions(const MomentumLedger& ledger);

}  // namespace arith
