#include "arith/metalearn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "arith/io.hpp"
#include "arith/run_config.hpp"

namespace arith {

WeightScheme WeightScheme::constant(double epsilon) {
    return {SchemeKind::constant, epsilon, {}};
}

WeightScheme WeightScheme::arithmetic(double epsilon) {
    return {SchemeKind::arithmetic, epsilon, {}};
}

WeightScheme WeightScheme::explicit_list(std::vector<double> w) {
    return {SchemeKind::explicit_list, 0.0, std::move(w)};
}

WeightScheme WeightScheme::fish_normalized(std::size_t n) {
    return constant(1.0 / static_cast<double>(n));
}

WeightScheme WeightScheme::arith_normalized(std::size_t n) {
    const auto nd = static_cast<double>(n);
    return arithmetic(nd * (nd - 1.0) / 2.0);
}

WeightScheme WeightScheme::fish_scaled(std::size_t n) {
    return constant(1.5 / static_cast<double>(n));
}

WeightScheme WeightScheme::arith_scaled(std::size_t n) {
    // 1.5 * 2(n+1-i)/(n(n+1)) == (n+1-i)/(n+e)  <=>  e = n(n-2)/3
    const auto nd = static_cast<double>(n);
    return arithmetic(nd * (nd - 2.0) / 3.0);
}

std::string to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::constant: return "constant";
        case SchemeKind::arithmetic: return "arithmetic";
        case SchemeKind::explicit_list: return "explicit";
    }
    return "?";
}

SchemeKind parse_scheme_kind(const std::string& s) {
    if (s == "constant") return SchemeKind::constant;
    if (s == "arithmetic") return SchemeKind::arithmetic;
    if (s == "explicit") return SchemeKind::explicit_list;
    throw std::invalid_argument("unknown weight scheme '" + s + "'");
}

std::vector<double> weights(const WeightScheme& scheme, std::size_t n) {
    if (n == 0) throw std::invalid_argument("weights: n must be >= 1");
    const auto nd = static_cast<double>(n);
    switch (scheme.kind) {
        case SchemeKind::constant:
            if (!(scheme.epsilon > 0.0)) throw std::invalid_argument("constant weight must be > 0");
            return std::vector<double>(n, scheme.epsilon);
        case SchemeKind::arithmetic: {
            const double denom = nd + scheme.epsilon;
            if (!(denom > 0.0)) throw std::invalid_argument("arithmetic weights need n + epsilon > 0");
            std::vector<double> w(n);
            for (std::size_t i = 1; i <= n; ++i) w[i - 1] = static_cast<double>(n + 1 - i) / denom;
            return w;
        }
        case SchemeKind::explicit_list:
            if (scheme.explicit_weights.size() != n) {
                throw std::invalid_argument("explicit weight list has " +
                                            std::to_string(scheme.explicit_weights.size()) +
                                            " entries, inner loop has " + std::to_string(n));
            }
            return scheme.explicit_weights;
    }
    throw std::logic_error("unhandled weight scheme");
}

std::vector<std::size_t> domain_order(std::mt19937_64& rng, std::size_t n, bool shuffle) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) std::shuffle(order.begin(), order.end(), rng);
    return order;
}

InnerTrace inner_loop(const NetworkSpec& spec, const ParamVector& theta,
                      std::span<const DomainDataset> sources, std::span<const std::size_t> order,
                      const InnerLoopOptions& options, SamplerState& sampler) {
    if (sources.empty()) throw std::invalid_argument("inner loop needs at least one source domain");
    if (options.k == 0) throw std::invalid_argument("inner loop needs k >= 1");
    if (!(options.learning_rate > 0.0)) throw std::invalid_argument("inner learning rate must be > 0");
    std::vector<bool> seen(sources.size(), false);
    for (std::size_t d : order) {
        if (d >= sources.size() || seen[d]) {
            throw std::invalid_argument("domain order is not a permutation of the sources");
        }
        seen[d] = true;
    }

    InnerTrace trace;
    trace.k = options.k;
    trace.domain_order.assign(order.begin(), order.end());
    trace.thetas.reserve(order.size() + 1);
    trace.thetas.push_back(theta);
    ParamVector current = theta;
    const SgdConfig sgd{options.learning_rate};
    for (std::size_t d : order) {
        const ParamVector start = current;
        for (std::size_t step = 0; step < options.k; ++step) {
            const Batch batch = options.domain_specific_sampling
                                    ? sample_batch(sampler, sources[d], options.batch_size)
                                    : sample_mixture_batch(sampler, sources, options.batch_size).batch;
            const LossAndGrad lg = loss_and_grad(spec, current, batch);
            if (step == 0) trace.losses.push_back(lg.loss);
            if (options.inner_adam != nullptr) {
                auto [next, state] = adam_step(current, lg.grad, std::move(*options.inner_adam));
                current = std::move(next);
                *options.inner_adam = std::move(state);
            } else {
                current = sgd_step(current, lg.grad, sgd);
            }
        }
        trace.grads.push_back(start - current);
        trace.thetas.push_back(current);
    }
    return trace;
}

GradVector meta_gradient(const InnerTrace& trace, std::span<const double> w) {
    if (w.size() != trace.n()) {
        throw std::invalid_argument("weight count does not match the number of inner gradients");
    }
    if (trace.grads.empty()) throw std::invalid_argument("empty inner trace");
    GradVector meta(trace.grads.front().size());
    for (std::size_t i = 0; i < trace.n(); ++i) {
        require_same_size(meta.size(), trace.grads[i].size(), "meta_gradient");
        for (std::size_t j = 0; j < meta.size(); ++j) meta[j] += w[i] * trace.grads[i][j];
    }
    return meta;
}

ParamVector outer_update_gradform(const ParamVector& theta, const InnerTrace& trace,
                                  std::span<const double> w) {
    const GradVector meta = meta_gradient(trace, w);
    require_same_size(theta.size(), meta.size(), "outer_update_gradform");
    return theta - meta;
}

ParamVector outer_update_gradform(const ParamVector& theta, const InnerTrace& trace,
                                  const WeightScheme& scheme) {
    return outer_update_gradform(theta, trace, weights(scheme, trace.n()));
}

ParamVector outer_update_avgform(const ParamVector& theta, const InnerTrace& trace, double epsilon) {
    const std::size_t n = trace.n();
    if (n == 0 || trace.thetas.size() != n + 1) throw std::invalid_argument("malformed inner trace");
    const double denom = static_cast<double>(n) + epsilon;
    if (!(denom > 0.0)) throw std::invalid_argument("averaging form needs epsilon > -n");
    ParamVector out(theta.size());
    for (std::size_t i = 1; i <= n; ++i) {
        require_same_size(theta.size(), trace.thetas[i].size(), "outer_update_avgform");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
        double s = epsilon * theta[j];
        for (std::size_t i = 1; i <= n; ++i) s += trace.thetas[i][j];
        out[j] = s / denom;
    }
    return out;
}

std::pair<ParamVector, std::size_t> swa_accumulate(const ParamVector& avg, std::size_t count,
                                                   const ParamVector& theta) {
    if (count == 0) return {theta, 1};
    require_same_size(avg.size(), theta.size(), "swa_accumulate");
    ParamVector out = avg;
    const double inv = 1.0 / static_cast<double>(count + 1);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += (theta[j] - avg[j]) * inv;
    return {std::move(out), count + 1};
}

Optimizer::Optimizer(const OptimizerSpec& spec, std::size_t n) : spec_(spec) {
    if (!(spec.learning_rate > 0.0)) throw std::invalid_argument("optimizer learning rate must be > 0");
    if (spec.kind == OptimizerKind::adam) adam_ = AdamState(n, spec.adam());
}

ParamVector Optimizer::step(const ParamVector& params, const GradVector& grad) {
    if (spec_.kind == OptimizerKind::sgd) return sgd_step(params, grad, {spec_.learning_rate});
    auto [next, state] = adam_step(params, grad, std::move(adam_));
    adam_ = std::move(state);
    return next;
}

ParamVector erm_step(const NetworkSpec& spec, const ParamVector& theta,
                     std::span<const DomainDataset> sources, std::size_t batch_size,
                     Optimizer& optimizer, SamplerState& sampler) {
    const MixtureBatch mb = sample_mixture_batch(sampler, sources, batch_size);
    return optimizer.step(theta, backward(spec, theta, mb.batch));
}

void MetaConfig::validate() const {
    network.validate();
    if (iterations == 0) throw std::invalid_argument("iterations must be >= 1");
    if (k == 0) throw std::invalid_argument("k must be >= 1");
    if (!(inner_lr > 0.0)) throw std::invalid_argument("inner_lr must be > 0");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (outer == OuterKind::adam) outer_adam.validate();
    if (swa && !(swa->burn_in_fraction >= 0.0 && swa->burn_in_fraction < 1.0)) {
        throw std::invalid_argument("swa.burn_in_fraction must lie in [0, 1)");
    }
    if (update_form == UpdateForm::average &&
        (scheme.kind != SchemeKind::arithmetic || outer != OuterKind::direct)) {
        throw std::invalid_argument("the averaging update form needs an arithmetic scheme and a direct outer step");
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

/// Cached full batches so per-iteration evaluation does not rebuild them.
struct Evaluator {
    const NetworkSpec& spec;
    std::optional<Batch> val;
    std::vector<Batch> targets;
    bool classification = true;

    Evaluator(const NetworkSpec& s, const DomainSuite& suite) : spec(s) {
        const DomainDataset pooled = suite.pooled_validation();
        classification = pooled.is_classification();
        if (pooled.size() > 0) val = pooled.as_batch();
        for (const auto& t : suite.targets) targets.push_back(t.as_batch());
    }

    EvalResult operator()(const ParamVector& p) const {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        EvalResult r;
        r.val_loss = val ? forward_loss(spec, p, *val) : nan;
        r.val_acc = (val && classification) ? accuracy(spec, p, *val) : nan;
        double sum = 0.0;
        for (const auto& t : targets) {
            const double acc = classification ? accuracy(spec, p, t) : nan;
            r.target_acc_per_domain.push_back(acc);
            sum += acc;
        }
        r.target_acc = targets.empty() ? nan : sum / static_cast<double>(targets.size());
        return r;
    }
};

/// Higher is better: accuracy for classification, negative loss otherwise.
double selection_score(const EvalResult& r) {
    return std::isnan(r.val_acc) ? -r.val_loss : r.val_acc;
}

}  // namespace

EvalResult evaluate(const NetworkSpec& spec, const ParamVector& params, const DomainSuite& suite) {
    return Evaluator(spec, suite)(params);
}

RunResult train(const MetaConfig& config, const DomainSuite& suite,
                std::optional<ParamVector> initial) {
    config.validate();
    if (suite.splits.empty()) throw std::invalid_argument("suite has no source domains");
    const auto t0 = std::chrono::steady_clock::now();
    const NetworkSpec& spec = config.network;
    const std::vector<DomainDataset> sources = suite.train_sets();
    const std::size_t n = sources.size();

    ParamVector theta = initial ? std::move(*initial) : init_params(spec, derive_seed(config.seed, 0));
    require_same_size(theta.size(), spec.param_count(), "initial parameters");
    SamplerState sampler(derive_seed(config.seed, 1));
    std::mt19937_64 order_rng(derive_seed(config.seed, 2));

    const std::vector<double> w = config.method == Method::meta ? weights(config.scheme, n)
                                                                : std::vector<double>{};
    std::optional<AdamState> outer_adam;
    if (config.outer == OuterKind::adam) outer_adam = AdamState(theta.size(), config.outer_adam);
    std::optional<AdamState> inner_adam;
    if (config.momentum_in_inner) {
        AdamConfig c = config.outer_adam;
        c.learning_rate = config.inner_lr;
        inner_adam = AdamState(theta.size(), c);
    }
    Optimizer erm_opt(config.erm_optimizer, theta.size());

    InnerLoopOptions inner;
    inner.k = config.k;
    inner.learning_rate = config.inner_lr;
    inner.batch_size = config.batch_size;
    inner.domain_specific_sampling = config.domain_specific_sampling;
    inner.inner_adam = inner_adam ? &*inner_adam : nullptr;

    const std::size_t swa_start =
        config.swa ? static_cast<std::size_t>(
                         std::floor(config.swa->burn_in_fraction * static_cast<double>(config.iterations)))
                   : config.iterations;

    RunResult result;
    result.config_echo = to_json(config);
    std::optional<Evaluator> eval;
    if (config.track_metrics) eval.emplace(spec, suite);
    double best = -std::numeric_limits<double>::infinity();
    ParamVector swa_avg;
    std::size_t swa_count = 0;

    for (std::size_t it = 0; it < config.iterations; ++it) {
        double train_loss = 0.0;
        if (config.method == Method::erm) {
            const MixtureBatch mb = sample_mixture_batch(sampler, sources, config.batch_size * n);
            const LossAndGrad lg = loss_and_grad(spec, theta, mb.batch);
            train_loss = lg.loss;
            theta = erm_opt.step(theta, lg.grad);
        } else {
            const auto order = domain_order(order_rng, n, config.shuffle_domains);
            const InnerTrace trace = inner_loop(spec, theta, sources, order, inner, sampler);
            train_loss = std::accumulate(trace.losses.begin(), trace.losses.end(), 0.0) /
                         static_cast<double>(trace.losses.size());
            if (config.update_form == UpdateForm::average) {
                theta = outer_update_avgform(theta, trace, config.scheme.epsilon);
            } else if (config.outer == OuterKind::direct) {
                theta = outer_update_gradform(theta, trace, w);
            } else {
                auto [next, state] = adam_step(theta, meta_gradient(trace, w), std::move(*outer_adam));
                theta = std::move(next);
                outer_adam = std::move(state);
            }
        }
        if (!all_finite(theta.span())) {
            throw std::runtime_error("parameters diverged (non-finite) at iteration " + std::to_string(it));
        }
        if (it >= swa_start) std::tie(swa_avg, swa_count) = swa_accumulate(swa_avg, swa_count, theta);

        IterationMetrics m;
        m.train_loss = train_loss;
        if (eval) {
            const EvalResult r = (*eval)(theta);
            m.val_loss = r.val_loss;
            m.val_acc = r.val_acc;
            m.target_acc = r.target_acc;
            m.target_acc_per_domain = r.target_acc_per_domain;
            if (selection_score(r) > best) {
                best = selection_score(r);
                result.selected_iteration = it;
                result.selected = r;
            }
        }
        result.metrics.push_back(std::move(m));
    }

    result.final_params = theta;
    if (eval) result.final_eval = (*eval)(theta);
    if (swa_count > 0) {
        result.swa_params = swa_avg;
        result.swa_count = swa_count;
        if (eval) result.swa_eval = (*eval)(swa_avg);
    }
    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

namespace {

nlohmann::json eval_json(const EvalResult& r) {
    return {{"val_loss", r.val_loss},
            {"val_acc", r.val_acc},
            {"target_acc", r.target_acc},
            {"target_acc_per_domain", r.target_acc_per_domain}};
}

}  // namespace

void save_run_result(const RunResult& result, const std::filesystem::path& dir,
                     const std::string& stem) {
    nlohmann::json summary = {{"config", result.config_echo},
                              {"iterations", result.metrics.size()},
                              {"selected_iteration", result.selected_iteration},
                              {"selected", eval_json(result.selected)},
                              {"final", eval_json(result.final_eval)},
                              {"swa_count", result.swa_count},
                              {"wall_clock_seconds", result.wall_clock_seconds}};
    if (result.swa_eval) summary["swa"] = eval_json(*result.swa_eval);
    write_file_atomic(dir / (stem + ".json"), summary.dump(2) + "\n");

    CsvWriter csv({"iter", "train_loss", "val_acc", "target_acc"});
    for (std::size_t i = 0; i < result.metrics.size(); ++i) {
        const auto& m = result.metrics[i];
        csv.row({std::to_string(i), format_double(m.train_loss), format_double(m.val_acc),
                 format_double(m.target_acc)});
    }
    csv.save(dir / (stem + "_metrics.csv"));
}

TaylorResidual taylor_residual(const NetworkSpec& spec, const ParamVector& theta,
                               std::span<const Batch> domain_batches,
                               std::span<const std::size_t> order, double alpha,
                               std::size_t target_step) {
    if (spec.activation == Activation::relu && spec.num_layers() > 1) {
        throw std::invalid_argument("taylor_residual needs a smooth activation (relu rejected)");
    }
    if (!(alpha >= 0.0)) throw std::invalid_argument("taylor_residual needs alpha >= 0");
    if (target_step == 0 || target_step > order.size()) {
        throw std::invalid_argument("target_step must lie in [1, len(order)]");
    }
    for (std::size_t d : order) {
        if (d >= domain_batches.size()) throw std::invalid_argument("domain order index out of range");
    }
    const Batch& target = domain_batches[order[target_step - 1]];
    const LossAndGrad at_start = loss_and_grad(spec, theta, target);

    TaylorResidual r;
    ParamVector current = theta;
    for (std::size_t i = 0; i + 1 < target_step; ++i) {
        const Batch& b = domain_batches[order[i]];
        r.dot_sum += dot(backward(spec, theta, b).span(), at_start.grad.span());
        const GradVector g = backward(spec, current, b);
        for (std::size_t j = 0; j < current.size(); ++j) current[j] -= alpha * g[j];
    }
    r.loss_at_target = forward_loss(spec, current, target);
    r.prediction = at_start.loss - alpha * r.dot_sum;
    r.residual = r.loss_at_target - r.prediction;
    return r;
}

double ensemble_gap(const NetworkSpec& spec, std::span<const ParamVector> models,
                    const Batch& batch) {
    if (models.size() < 2) throw std::invalid_argument("ensemble_gap needs at least two models");
    ParamVector avg(models.front().size());
    for (const auto& m : models) {
        require_same_size(avg.size(), m.size(), "ensemble_gap");
        avg += m;
    }
    avg *= 1.0 / static_cast<double>(models.size());

    const Matrix of_avg = forward(spec, avg, batch.inputs);
    Matrix avg_of(of_avg.rows, of_avg.cols);
    for (const auto& m : models) {
        const Matrix out = forward(spec, m, batch.inputs);
        for (std::size_t i = 0; i < out.data.size(); ++i) avg_of.data[i] += out.data[i];
    }
    const double inv = 1.0 / static_cast<double>(models.size());
    double gap = 0.0;
    for (std::size_t i = 0; i < of_avg.data.size(); ++i) {
        gap = std::max(gap, std::abs(of_avg.data[i] - avg_of.data[i] * inv));
    }
    return gap;
}

}  // namespace arith
