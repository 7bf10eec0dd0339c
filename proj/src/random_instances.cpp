#include "arith/random_instances.hpp"

namespace arith {

NetworkSpec random_network_spec(std::mt19937_64& rng, Activation activation, LossKind loss,
                                std::size_t max_params) {
    std::uniform_int_distribution<std::size_t> inputs(1, 4), hidden_layers(0, 2), width(1, 8);
    const std::size_t min_out = loss == LossKind::softmax_cross_entropy ? 2 : 1;
    std::uniform_int_distribution<std::size_t> outputs(min_out, 3);
    for (;;) {
        NetworkSpec spec;
        spec.activation = activation;
        spec.loss_kind = loss;
        spec.layer_sizes.push_back(inputs(rng));
        const std::size_t h = hidden_layers(rng);
        for (std::size_t i = 0; i < h; ++i) spec.layer_sizes.push_back(width(rng));
        spec.layer_sizes.push_back(outputs(rng));
        if (spec.param_count() <= max_params) return spec;
    }
}

ParamVector random_params(std::size_t n, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> gauss(0.0, scale);
    ParamVector p(n);
    for (double& x : p) x = gauss(rng);
    return p;
}

GradVector random_grad(std::size_t n, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> gauss(0.0, scale);
    GradVector g(n);
    for (double& x : g) x = gauss(rng);
    return g;
}

Batch random_batch(const NetworkSpec& spec, std::size_t rows, std::mt19937_64& rng, int domain_id) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Batch b;
    b.domain_id = domain_id;
    b.inputs = Matrix(rows, spec.input_dim());
    for (double& x : b.inputs.data) x = gauss(rng);
    if (spec.loss_kind == LossKind::softmax_cross_entropy) {
        std::uniform_int_distribution<std::size_t> label(0, spec.output_dim() - 1);
        ClassTargets t(rows);
        for (auto& y : t) y = label(rng);
        b.targets = std::move(t);
    } else {
        RealTargets t(rows, spec.output_dim());
        for (double& y : t.data) y = gauss(rng);
        b.targets = std::move(t);
    }
    return b;
}

InnerTrace random_trace(const ParamVector& theta, std::size_t n, std::mt19937_64& rng, double scale) {
    InnerTrace trace;
    trace.thetas.push_back(theta);
    for (std::size_t i = 0; i < n; ++i) {
        GradVector g = random_grad(theta.size(), rng, scale);
        trace.thetas.push_back(trace.thetas.back() - g);
        trace.grads.push_back(std::move(g));
        trace.losses.push_back(0.0);
        trace.domain_order.push_back(i);
    }
    return trace;
}

}  // namespace arith
