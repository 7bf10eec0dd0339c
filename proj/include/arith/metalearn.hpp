#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arith/domains.hpp"
#include "arith/nn.hpp"
#include "arith/optim.hpp"

namespace arith {

// ---------------------------------------------------------------------------
// Outer-loop weighting
// ---------------------------------------------------------------------------

enum class SchemeKind { constant, arithmetic, explicit_list };

/// Rule producing the outer-loop coefficient of each inner-loop gradient.
///   constant(e):   [e, e, ..., e]
///   arithmetic(e): [(n + 1 - i) / (n + e)] for i = 1..n
///   explicit:      the stored list, whose length must equal n
struct WeightScheme {
    SchemeKind kind = SchemeKind::arithmetic;
    double epsilon = 1.0;
    std::vector<double> explicit_weights;

    static WeightScheme constant(double epsilon);
    static WeightScheme arithmetic(double epsilon);
    static WeightScheme explicit_list(std::vector<double> weights);

    /// Weights summing to 1: constant(1/n) and arithmetic(n(n-1)/2).
    static WeightScheme fish_normalized(std::size_t n);
    static WeightScheme arith_normalized(std::size_t n);
    /// 1.5x the normalized magnitudes; arithmetic(1) when n = 3.
    static WeightScheme fish_scaled(std::size_t n);
    static WeightScheme arith_scaled(std::size_t n);

    friend bool operator==(const WeightScheme&, const WeightScheme&) = default;
};

std::string to_string(SchemeKind k);
SchemeKind parse_scheme_kind(const std::string& s);

std::vector<double> weights(const WeightScheme& scheme, std::size_t n);

// ---------------------------------------------------------------------------
// Inner loop
// ---------------------------------------------------------------------------

/// Record of one inner loop. grads[i] is the displacement thetas[i] - thetas[i+1]
/// accumulated over the k steps spent on domain_order[i].
struct InnerTrace {
    std::vector<ParamVector> thetas;
    std::vector<GradVector> grads;
    std::vector<double> losses;
    std::vector<std::size_t> domain_order;
    std::size_t k = 1;

    [[nodiscard]] std::size_t n() const { return grads.size(); }
};

struct InnerLoopOptions {
    std::size_t k = 1;
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    /// false: every inner step uses a batch pooled uniformly over all sources.
    bool domain_specific_sampling = true;
    /// Non-null: inner steps go through this Adam state instead of plain SGD.
    AdamState* inner_adam = nullptr;
};

/// Shuffled (or identity) permutation of the n source domains.
std::vector<std::size_t> domain_order(std::mt19937_64& rng, std::size_t n, bool shuffle);

InnerTrace inner_loop(const NetworkSpec& spec, const ParamVector& theta,
                      std::span<const DomainDataset> sources, std::span<const std::size_t> order,
                      const InnerLoopOptions& options, SamplerState& sampler);

// ---------------------------------------------------------------------------
// Outer updates
// ---------------------------------------------------------------------------

/// Sum of weights[i] * grads[i].
GradVector meta_gradient(const InnerTrace& trace, std::span<const double> weights);

/// Direct outer step: theta - sum_i weights[i] * g_i.
ParamVector outer_update_gradform(const ParamVector& theta, const InnerTrace& trace,
                                  std::span<const double> weights);
ParamVector outer_update_gradform(const ParamVector& theta, const InnerTrace& trace,
                                  const WeightScheme& scheme);

/// (epsilon * theta + sum_i thetas[i+1]) / (n + epsilon): the average of the
/// intermediate models, with theta counted epsilon times.
ParamVector outer_update_avgform(const ParamVector& theta, const InnerTrace& trace, double epsilon);

/// Running mean over accepted checkpoints.
std::pair<ParamVector, std::size_t> swa_accumulate(const ParamVector& avg, std::size_t count,
                                                   const ParamVector& theta);

// ---------------------------------------------------------------------------
// Optimizers used by the training loop
// ---------------------------------------------------------------------------

enum class OptimizerKind { sgd, adam };

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    [[nodiscard]] AdamConfig adam() const { return {learning_rate, beta1, beta2, eps}; }
    friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

/// SGD or Adam behind one stepping interface.
class Optimizer {
public:
    Optimizer(const OptimizerSpec& spec, std::size_t n);
    ParamVector step(const ParamVector& params, const GradVector& grad);
    [[nodiscard]] const OptimizerSpec& spec() const { return spec_; }

private:
    OptimizerSpec spec_;
    AdamState adam_;
};

/// One ERM step on a batch pooled uniformly over the sources.
ParamVector erm_step(const NetworkSpec& spec, const ParamVector& theta,
                     std::span<const DomainDataset> sources, std::size_t batch_size,
                     Optimizer& optimizer, SamplerState& sampler);

// ---------------------------------------------------------------------------
// Training runs
// ---------------------------------------------------------------------------

enum class Method { meta, erm };
enum class OuterKind { direct, adam };
enum class UpdateForm { gradient, average };

struct SwaConfig {
    double burn_in_fraction = 0.5;
    friend bool operator==(const SwaConfig&, const SwaConfig&) = default;
};

struct MetaConfig {
    NetworkSpec network{{2, 16, 2}, Activation::tanh, LossKind::softmax_cross_entropy};
    Method method = Method::meta;
    WeightScheme scheme = WeightScheme::arithmetic(3.0);
    std::size_t k = 1;
    double inner_lr = 0.1;
    OuterKind outer = OuterKind::adam;
    AdamConfig outer_adam{0.01, 0.9, 0.999, 1e-8};
    std::size_t iterations = 100;
    std::size_t batch_size = 32;
    bool shuffle_domains = true;
    std::uint64_t seed = 0;
    std::optional<SwaConfig> swa;
    UpdateForm update_form = UpdateForm::gradient;
    bool momentum_in_inner = false;
    bool domain_specific_sampling = true;
    /// ERM's optimizer; its pooled batch holds batch_size samples per source.
    OptimizerSpec erm_optimizer{};
    /// Evaluate validation/target metrics every iteration.
    bool track_metrics = true;

    void validate() const;
};

struct IterationMetrics {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double target_acc = 0.0;
    std::vector<double> target_acc_per_domain;
};

struct EvalResult {
    double val_loss = 0.0;
    double val_acc = 0.0;
    double target_acc = 0.0;
    std::vector<double> target_acc_per_domain;
};

struct RunResult {
    ParamVector final_params;
    std::optional<ParamVector> swa_params;
    std::size_t swa_count = 0;
    std::vector<IterationMetrics> metrics;
    /// Iteration with the best source-validation accuracy (first on ties).
    std::size_t selected_iteration = 0;
    EvalResult selected;
    EvalResult final_eval;
    std::optional<EvalResult> swa_eval;
    double wall_clock_seconds = 0.0;
    nlohmann::json config_echo;
};

/// Accuracy/loss of one model on the pooled source validation and the targets.
/// Accuracies are NaN for regression suites.
EvalResult evaluate(const NetworkSpec& spec, const ParamVector& params, const DomainSuite& suite);

RunResult train(const MetaConfig& config, const DomainSuite& suite,
                std::optional<ParamVector> initial = std::nullopt);

void save_run_result(const RunResult& result, const std::filesystem::path& dir,
                     const std::string& stem);

// ---------------------------------------------------------------------------
// Analytical checks
// ---------------------------------------------------------------------------

struct TaylorResidual {
    double residual = 0.0;
    double dot_sum = 0.0;
    double loss_at_target = 0.0;
    double prediction = 0.0;
};

/// Runs target_step - 1 full-batch SGD steps over `order` and compares the loss
/// of domain order[target_step - 1] against its first-order prediction
///   L(theta_1) - alpha * sum_{i<k} grad L_i(theta_1) . grad L(theta_1).
TaylorResidual taylor_residual(const NetworkSpec& spec, const ParamVector& theta,
                               std::span<const Batch> domain_batches,
                               std::span<const std::size_t> order, double alpha,
                               std::size_t target_step);

/// L-infinity distance between the output of the averaged model and the
/// average of the models' outputs.
double ensemble_gap(const NetworkSpec& spec, std::span<const ParamVector> models,
                    const Batch& batch);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace arith
