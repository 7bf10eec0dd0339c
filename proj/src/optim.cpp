#include "arith/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace arith {

ParamVector sgd_step(const ParamVector& params, const GradVector& grad, const SgdConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("SGD learning rate must be > 0");
    require_same_size(params.size(), grad.size(), "sgd_step");
    ParamVector out = params;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= cfg.learning_rate * grad[i];
    return out;
}

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("Adam learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("Adam eps must be > 0");
}

AdamState::AdamState(std::size_t n, AdamConfig cfg) : config(cfg), m(n, 0.0), v(n, 0.0) {
    config.validate();
}

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const GradVector& grad,
                                            AdamState state) {
    require_same_size(params.size(), grad.size(), "adam_step");
    require_same_size(params.size(), state.m.size(), "adam_step state");
    const auto& c = state.config;
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    ParamVector out = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        out[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
    }
    return {std::move(out), std::move(state)};
}

MomentumLedger::MomentumLedger(std::size_t n, std::span<const int> domain_ids) : dim(n) {
    if (domain_ids.empty()) throw std::invalid_argument("ledger needs at least one domain");
    for (int id : domain_ids) {
        if (!contributions.emplace(id, std::vector<double>(n, 0.0)).second) {
            throw std::invalid_argument("duplicate ledger domain " + std::to_string(id));
        }
    }
}

std::vector<double> MomentumLedger::total() const {
    std::vector<double> sum(dim, 0.0);
    for (const auto& [id, c] : contributions) {
        for (std::size_t i = 0; i < dim; ++i) sum[i] += c[i];
    }
    return sum;
}

MomentumLedger ledger_update(MomentumLedger ledger, const GradVector& grad, int domain_id,
                             double beta1) {
    auto it = ledger.contributions.find(domain_id);
    if (it == ledger.contributions.end()) {
        throw std::invalid_argument("domain " + std::to_string(domain_id) +
                                    " is not registered in the ledger");
    }
    require_same_size(ledger.dim, grad.size(), "ledger_update");
    for (auto& [id, c] : ledger.contributions) {
        for (double& x : c) x *= beta1;
    }
    for (std::size_t i = 0; i < ledger.dim; ++i) it->second[i] += (1.0 - beta1) * grad[i];
    ++ledger.updates;
    return ledger;
}

std::map<int, double> ledger_fractions(const MomentumLedger& ledger) {
    double total = 0.0;
    std::map<int, double> out;
    for (const auto& [id, c] : ledger.contributions) {
        out[id] = norm1(c);
        total += out[id];
    }
    if (!(total > 0.0)) throw std::invalid_argument("ledger fractions of an all-zero ledger");
    for (auto& [id, f] : out) f /= total;
    return out;
}

}  // namespace arith
