#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "arith/flat_vector.hpp"

namespace arith {

enum class Activation { tanh, relu };
enum class LossKind { softmax_cross_entropy, squared_error };

std::string to_string(Activation a);
std::string to_string(LossKind k);
Activation parse_activation(const std::string& s);
LossKind parse_loss_kind(const std::string& s);

/// Fully connected network shape. Parameters are flattened layer by layer:
/// the (out x in) weight matrix in row-major order, then the out biases.
/// Hidden layers apply the activation; the output layer is affine.
struct NetworkSpec {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::tanh;
    LossKind loss_kind = LossKind::softmax_cross_entropy;

    void validate() const;
    [[nodiscard]] std::size_t param_count() const;
    [[nodiscard]] std::size_t input_dim() const { return layer_sizes.front(); }
    [[nodiscard]] std::size_t output_dim() const { return layer_sizes.back(); }
    [[nodiscard]] std::size_t num_layers() const { return layer_sizes.size() - 1; }
    /// Offset of layer l's weight block; its bias block follows at
    /// weight_offset(l) + out*in.
    [[nodiscard]] std::size_t weight_offset(std::size_t layer) const;
    [[nodiscard]] bool is_bias(std::size_t flat_index) const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data).subspan(r * cols, cols);
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

using ClassTargets = std::vector<std::size_t>;
using RealTargets = Matrix;

struct Batch {
    Matrix inputs;
    std::variant<ClassTargets, RealTargets> targets;
    int domain_id = -1;

    [[nodiscard]] std::size_t size() const { return inputs.rows; }
};

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed);

/// Network outputs (pre-softmax for classification), one row per input.
Matrix forward(const NetworkSpec& spec, const ParamVector& params, const Matrix& inputs);

/// Mean per-sample loss. Squared error is 0.5 * ||y - t||^2 per sample.
double forward_loss(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

GradVector backward(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

struct LossAndGrad {
    double loss = 0.0;
    GradVector grad;
};
LossAndGrad loss_and_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

/// Fraction of correctly classified samples (argmax of the outputs).
double accuracy(const NetworkSpec& spec, const ParamVector& params, const Batch& batch);

using ScalarFn = std::function<double(const ParamVector&)>;

/// Central differences, one coordinate at a time.
GradVector finite_diff_grad(const ScalarFn& f, const ParamVector& params, double h);
GradVector finite_diff_grad(const NetworkSpec& spec, const ParamVector& params, const Batch& batch,
                            double h);

/// Per-coordinate agreement test used for gradient checking:
/// |a - b| <= max(rel_tol * max(|a|, |b|), abs_floor).
bool grads_agree(std::span<const double> analytic, std::span<const double> numeric,
                 double rel_tol = 1e-5, double abs_floor = 1e-8);

}  // namespace arith
