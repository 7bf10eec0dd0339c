#include "arith/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace arith {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "?";
}

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::softmax_cross_entropy: return "softmax_cross_entropy";
        case LossKind::squared_error: return "squared_error";
    }
    return "?";
}

Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

LossKind parse_loss_kind(const std::string& s) {
    if (s == "softmax_cross_entropy") return LossKind::softmax_cross_entropy;
    if (s == "squared_error") return LossKind::squared_error;
    throw std::invalid_argument("unknown loss kind '" + s + "'");
}

void NetworkSpec::validate() const {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("NetworkSpec needs at least an input and an output layer");
    }
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw std::invalid_argument("NetworkSpec layer sizes must be >= 1");
    }
}

std::size_t NetworkSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
    }
    return n;
}

std::size_t NetworkSpec::weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += (layer_sizes[l] + 1) * layer_sizes[l + 1];
    return off;
}

bool NetworkSpec::is_bias(std::size_t flat_index) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t w = layer_sizes[l] * layer_sizes[l + 1];
        const std::size_t block = w + layer_sizes[l + 1];
        if (flat_index < off + block) return flat_index >= off + w;
        off += block;
    }
    throw std::out_of_range("NetworkSpec::is_bias: index past parameter count");
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    ParamVector p(spec.param_count());
    std::size_t off = 0;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < in * out; ++i) p[off + i] = dist(rng);
        off += in * out + out;  // biases stay zero
    }
    return p;
}

namespace {

void check_shapes(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs) {
    spec.validate();
    if (params.size() != spec.param_count()) {
        throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) +
                                    " entries, network expects " +
                                    std::to_string(spec.param_count()));
    }
    if (inputs.cols != spec.input_dim()) {
        throw std::invalid_argument("input dimension " + std::to_string(inputs.cols) +
                                    " does not match network input " +
                                    std::to_string(spec.input_dim()));
    }
}

void check_batch(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
    check_shapes(spec, params, batch.inputs);
    if (batch.size() == 0) throw std::invalid_argument("empty batch");
    if (spec.loss_kind == LossKind::softmax_cross_entropy) {
        const auto* cls = std::get_if<ClassTargets>(&batch.targets);
        if (cls == nullptr) {
            throw std::invalid_argument("classification loss needs class-index targets");
        }
        if (cls->size() != batch.size()) {
            throw std::invalid_argument("target count does not match batch size");
        }
        for (std::size_t c : *cls) {
            if (c >= spec.output_dim()) {
                throw std::invalid_argument("class index " + std::to_string(c) +
                                            " out of range for " +
                                            std::to_string(spec.output_dim()) + " outputs");
            }
        }
    } else {
        const auto* real = std::get_if<RealTargets>(&batch.targets);
        if (real == nullptr) throw std::invalid_argument("squared error needs real-valued targets");
        if (real->rows != batch.size() || real->cols != spec.output_dim()) {
            throw std::invalid_argument("regression target shape does not match batch/output");
        }
    }
}

double activate(Activation a, double z) {
    return a == Activation::tanh ? std::tanh(z) : std::max(z, 0.0);
}

double activation_slope(Activation a, double z, double activated) {
    if (a == Activation::tanh) return 1.0 - activated * activated;
    return z > 0.0 ? 1.0 : 0.0;
}

/// Per-sample forward pass keeping pre-activations and activations of every layer.
struct Tape {
    std::vector<std::vector<double>> z;  // z[l] for l = 1..L (index l-1)
    std::vector<std::vector<double>> a;  // a[0] = input, a[l] = activated layer l
};

void run_forward(const NetworkSpec& spec, std::span<const double> params,
                 std::span<const double> x, Tape& tape) {
    const std::size_t L = spec.num_layers();
    tape.z.resize(L);
    tape.a.resize(L + 1);
    tape.a[0].assign(x.begin(), x.end());
    std::size_t off = 0;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const double* W = params.data() + off;
        const double* b = W + in * out;
        auto& z = tape.z[l];
        auto& a = tape.a[l + 1];
        z.assign(out, 0.0);
        a.assign(out, 0.0);
        const auto& prev = tape.a[l];
        const bool hidden = l + 1 < L;
        for (std::size_t r = 0; r < out; ++r) {
            double s = b[r];
            for (std::size_t c = 0; c < in; ++c) s += W[r * in + c] * prev[c];
            z[r] = s;
            a[r] = hidden ? activate(spec.activation, s) : s;
        }
        off += in * out + out;
    }
}

/// Loss of one sample and its derivative w.r.t. the output pre-activations.
double sample_loss(const NetworkSpec& spec, std::span<const double> out, const Batch& batch,
                   std::size_t i, std::vector<double>* dout) {
    if (spec.loss_kind == LossKind::softmax_cross_entropy) {
        const std::size_t label = std::get<ClassTargets>(batch.targets)[i];
        const double mx = *std::max_element(out.begin(), out.end());
        double sum = 0.0;
        for (double o : out) sum += std::exp(o - mx);
        const double lse = mx + std::log(sum);
        if (dout != nullptr) {
            dout->resize(out.size());
            for (std::size_t j = 0; j < out.size(); ++j) {
                (*dout)[j] = std::exp(out[j] - lse) - (j == label ? 1.0 : 0.0);
            }
        }
        return lse - out[label];
    }
    const auto target = std::get<RealTargets>(batch.targets).row(i);
    double loss = 0.0;
    if (dout != nullptr) dout->resize(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double r = out[j] - target[j];
        loss += 0.5 * r * r;
        if (dout != nullptr) (*dout)[j] = r;
    }
    return loss;
}

}  // namespace

Matrix forward(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs) {
    check_shapes(spec, params, inputs);
    Matrix out(inputs.rows, spec.output_dim());
    Tape tape;
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        run_forward(spec, params.span(), inputs.row(i), tape);
        std::copy(tape.a.back().begin(), tape.a.back().end(), out.data.begin() + i * out.cols);
    }
    return out;
}

double forward_loss(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
    check_batch(spec, params, batch);
    Tape tape;
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        run_forward(spec, params.span(), batch.inputs.row(i), tape);
        total += sample_loss(spec, tape.a.back(), batch, i, nullptr);
    }
    return total / static_cast<double>(batch.size());
}

LossAndGrad loss_and_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
    check_batch(spec, params, batch);
    const std::size_t L = spec.num_layers();
    LossAndGrad result{0.0, GradVector(params.size())};
    auto& grad = result.grad;
    Tape tape;
    std::vector<double> delta;
    std::vector<double> prev_delta;
    std::vector<std::size_t> offsets(L);
    for (std::size_t l = 0; l < L; ++l) offsets[l] = spec.weight_offset(l);

    for (std::size_t i = 0; i < batch.size(); ++i) {
        run_forward(spec, params.span(), batch.inputs.row(i), tape);
        result.loss += sample_loss(spec, tape.a.back(), batch, i, &delta);
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = spec.layer_sizes[l];
            const std::size_t out = spec.layer_sizes[l + 1];
            const double* W = params.values.data() + offsets[l];
            double* dW = grad.values.data() + offsets[l];
            double* db = dW + in * out;
            const auto& prev = tape.a[l];
            for (std::size_t r = 0; r < out; ++r) {
                for (std::size_t c = 0; c < in; ++c) dW[r * in + c] += delta[r] * prev[c];
                db[r] += delta[r];
            }
            if (l == 0) break;
            prev_delta.assign(in, 0.0);
            for (std::size_t r = 0; r < out; ++r) {
                for (std::size_t c = 0; c < in; ++c) prev_delta[c] += W[r * in + c] * delta[r];
            }
            for (std::size_t c = 0; c < in; ++c) {
                prev_delta[c] *= activation_slope(spec.activation, tape.z[l - 1][c], prev[c]);
            }
            delta.swap(prev_delta);
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    result.loss *= inv;
    grad *= inv;
    return result;
}

GradVector backward(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
    return loss_and_grad(spec, params, batch).grad;
}

double accuracy(const NetworkSpec& spec, const ParamVector& params, const Batch& batch) {
    const auto* cls = std::get_if<ClassTargets>(&batch.targets);
    if (cls == nullptr) throw std::invalid_argument("accuracy needs class-index targets");
    const Matrix out = forward(spec, params, batch.inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < out.rows; ++i) {
        const auto row = out.row(i);
        const auto best = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        if (best == (*cls)[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(out.rows);
}

GradVector finite_diff_grad(const ScalarFn& f, const ParamVector& params, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
    GradVector g(params.size());
    ParamVector probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + h;
        const double up = f(probe);
        probe[i] = params[i] - h;
        const double down = f(probe);
        probe[i] = params[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

GradVector finite_diff_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch,
                            double h) {
    return finite_diff_grad([&](const ParamVector& p) { return forward_loss(spec, p, batch); },
                            params, h);
}

bool grads_agree(std::span<const double> analytic, std::span<const double> numeric, double rel_tol,
                 double abs_floor) {
    if (analytic.size() != numeric.size()) return false;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
        if (std::abs(analytic[i] - numeric[i]) > std::max(rel_tol * scale, abs_floor)) return false;
    }
    return true;
}

}  // namespace arith
