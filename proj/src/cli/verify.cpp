#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "arith/cli.hpp"
#include "arith/optim.hpp"
#include "arith/quadratic.hpp"
#include "arith/random_instances.hpp"

namespace arith::cli {

namespace {

/// Records one named check; failures keep a readable message.
class Checker {
public:
    explicit Checker(SuiteReport& report) : report_(report) {}

    void expect(bool ok, const std::string& what) {
        ++report_.checks;
        if (!ok) report_.failures.push_back(what);
    }

    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream msg;
        msg.precision(17);
        msg << what << ": got " << got << ", expected " << want << " (tol " << tol << ")";
        expect(std::abs(got - want) <= tol, msg.str());
    }

private:
    SuiteReport& report_;
};

void suite_identity(Checker& check, const VerifyOptions& opt) {
    struct Case {
        std::size_t n;
        double eps;
        std::vector<double> want;
    };
    const std::vector<Case> exact{{3, 3.0, {1.0 / 2, 1.0 / 3, 1.0 / 6}},
                                  {5, 10.0, {1.0 / 3, 4.0 / 15, 1.0 / 5, 2.0 / 15, 1.0 / 15}},
                                  {3, 1.0, {3.0 / 4, 1.0 / 2, 1.0 / 4}}};
    for (const auto& c : exact) {
        const auto w = opt.weight_fn(WeightScheme::arithmetic(c.eps), c.n);
        check.expect(w.size() == c.n, "arithmetic weight count for n=" + std::to_string(c.n));
        for (std::size_t i = 0; i < std::min(w.size(), c.n); ++i) {
            check.near(w[i], c.want[i], 1e-15,
                       "arithmetic(n=" + std::to_string(c.n) + ") weight " + std::to_string(i + 1));
        }
    }

    std::mt19937_64 rng(derive_seed(opt.seed, 10));
    const std::array<std::size_t, 3> sizes{2, 3, 5};
    std::uniform_real_distribution<double> eps_dist(0.1, 10.0);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 500);
    for (std::size_t t = 0; t < 100; ++t) {
        const std::size_t n = sizes[t % sizes.size()];
        const double eps = eps_dist(rng);
        const ParamVector theta = random_params(dim_dist(rng), rng);
        const InnerTrace trace = random_trace(theta, n, rng);
        const auto w = opt.weight_fn(WeightScheme::arithmetic(eps), n);
        if (w.size() != n) {
            check.expect(false, "weight function returned the wrong count");
            continue;
        }
        const ParamVector g = outer_update_gradform(theta, trace, w);
        const ParamVector a = outer_update_avgform(theta, trace, eps);
        check.expect(max_abs_diff(g.span(), a.span()) <= 1e-12,
                     "gradient and averaging forms differ on trace " + std::to_string(t));
    }

    for (std::size_t t = 0; t < 10; ++t) {
        const std::size_t n = sizes[t % sizes.size()];
        const double eps = eps_dist(rng);
        const auto w = opt.weight_fn(WeightScheme::arithmetic(eps), n);
        if (w.size() != n) continue;
        ParamVector via_grad = random_params(dim_dist(rng), rng);
        ParamVector via_avg = via_grad;
        for (std::size_t it = 0; it < 50; ++it) {
            std::mt19937_64 step_rng(derive_seed(opt.seed, 1000 * t + it));
            const InnerTrace tg = random_trace(via_grad, n, step_rng);
            std::mt19937_64 step_rng2(derive_seed(opt.seed, 1000 * t + it));
            const InnerTrace ta = random_trace(via_avg, n, step_rng2);
            via_grad = outer_update_gradform(via_grad, tg, w);
            via_avg = outer_update_avgform(via_avg, ta, eps);
        }
        check.expect(max_abs_diff(via_grad.span(), via_avg.span()) <= 1e-10,
                     "50-iteration trajectories drift apart on run " + std::to_string(t));
    }
}

void suite_taylor(Checker& check, const VerifyOptions& opt) {
    {
        const NetworkSpec spec{{1, 1}, Activation::tanh, LossKind::squared_error};
        const ParamVector theta(std::vector<double>{0.7, 0.0});
        std::vector<Batch> batches;
        for (double c : {1.0, -1.0}) {
            Batch b;
            b.inputs = Matrix(1, 1, 0.0);
            b.targets = RealTargets(1, 1, c);
            batches.push_back(std::move(b));
        }
        const std::vector<std::size_t> order{0, 1};
        const auto r = taylor_residual(spec, theta, batches, order, 0.1, 2);
        check.near(r.residual, 0.005, 1e-12, "quadratic hand case residual");
    }

    // Second step at alpha in {0.1, 0.05}; the third step needs a smaller alpha
    // before the cubic term stops competing with the quadratic one.
    struct Probe {
        std::size_t target_step;
        std::vector<double> alphas;
    };
    const std::array<Probe, 2> probes{{{2, {0.1, 0.05}}, {3, {1e-3}}}};
    std::mt19937_64 rng(derive_seed(opt.seed, 20));
    for (std::size_t t = 0; t < 20; ++t) {
        const LossKind loss = t % 2 == 0 ? LossKind::squared_error : LossKind::softmax_cross_entropy;
        const NetworkSpec spec = random_network_spec(rng, Activation::tanh, loss);
        const ParamVector theta = init_params(spec, rng());
        std::vector<Batch> batches;
        for (int d = 0; d < 3; ++d) batches.push_back(random_batch(spec, 32, rng, d));
        const std::vector<std::size_t> order{0, 1, 2};
        for (const auto& probe : probes) {
            for (double alpha : probe.alphas) {
                const double r1 = taylor_residual(spec, theta, batches, order, alpha, probe.target_step).residual;
                const double r2 =
                    taylor_residual(spec, theta, batches, order, alpha / 2, probe.target_step).residual;
                const double ratio = r1 / r2;
                std::ostringstream msg;
                msg << "residual ratio " << ratio << " outside [3.5, 4.5] on instance " << t << " (step "
                    << probe.target_step << ", alpha " << alpha << ")";
                check.expect(ratio >= 3.5 && ratio <= 4.5, msg.str());
            }
        }
    }
}

void suite_centroid(Checker& check, const VerifyOptions& opt) {
    using quadratic::AffineManifold;
    using quadratic::QuadraticTask;
    using quadratic::Vector;

    const QuadraticTask pair{{AffineManifold::point(Vector::Constant(1, 1.0)),
                              AffineManifold::point(Vector::Constant(1, -1.0))}};
    const std::vector<std::size_t> pair_order{0, 1};
    const Vector zero = Vector::Zero(1);
    auto fixed = [&](const QuadraticTask& task, const std::vector<double>& w, double lr,
                     std::span<const std::size_t> order, const Vector& start) -> std::optional<Vector> {
        try {
            return quadratic::fixed_point(task, w, lr, order, 200000, start, 1e-14).theta;
        } catch (const quadratic::ConvergenceError&) {
            return std::nullopt;
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    };
    const auto arith_pair = fixed(pair, opt.weight_fn(WeightScheme::arithmetic(1.0), 2), 0.5, pair_order, zero);
    const auto fish_pair = fixed(pair, opt.weight_fn(WeightScheme::constant(1.0), 2), 0.5, pair_order, zero);
    check.expect(arith_pair.has_value(), "arithmetic fixed point on {+1,-1} did not converge");
    check.expect(fish_pair.has_value(), "full-interpolation fixed point on {+1,-1} did not converge");
    if (arith_pair) check.near((*arith_pair)(0), 0.2, 1e-10, "arithmetic fixed point on {+1,-1}, lr 0.5");
    if (fish_pair) check.near((*fish_pair)(0), -1.0 / 3.0, 1e-10, "full-interpolation fixed point on {+1,-1}");

    std::mt19937_64 rng(derive_seed(opt.seed, 30));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> eps_dist(0.1, 10.0);
    std::uniform_int_distribution<Eigen::Index> dim_dist(1, 4);
    const std::array<std::size_t, 3> sizes{2, 3, 5};
    for (std::size_t t = 0; t < 50; ++t) {
        const std::size_t n = sizes[t % sizes.size()];
        const Eigen::Index dim = dim_dist(rng);
        QuadraticTask task;
        for (std::size_t i = 0; i < n; ++i) {
            Vector phi(dim);
            for (Eigen::Index k = 0; k < dim; ++k) phi(k) = gauss(rng);
            task.manifolds.push_back(AffineManifold::point(phi));
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Vector start(dim);
        for (Eigen::Index k = 0; k < dim; ++k) start(k) = gauss(rng);

        const auto arith = fixed(task, opt.weight_fn(WeightScheme::arithmetic(eps_dist(rng)), n), 1.0, order, start);
        const Vector centroid = quadratic::point_centroid(task);
        check.expect(arith && (*arith - centroid).lpNorm<Eigen::Infinity>() <= 1e-12,
                     "arithmetic fixed point misses the centroid on task " + std::to_string(t));
        const auto fish = fixed(task, opt.weight_fn(WeightScheme::constant(1.0), n), 1.0, order, start);
        const Vector last = task.manifolds.back().project(start);
        check.expect(fish && (*fish - last).lpNorm<Eigen::Infinity>() <= 1e-12,
                     "full-interpolation fixed point misses the last optimum on task " + std::to_string(t));
    }
}

void suite_ledger(Checker& check, const VerifyOptions& opt) {
    std::mt19937_64 rng(derive_seed(opt.seed, 40));
    std::uniform_int_distribution<int> domain(0, 2);
    const std::vector<int> ids{0, 1, 2};
    for (std::size_t t = 0; t < 10; ++t) {
        const std::size_t dim = 1 + t * 7;
        const AdamConfig cfg{1e-3, 0.9, 0.999, 1e-8};
        AdamState state(dim, cfg);
        MomentumLedger ledger(dim, ids);
        ParamVector theta = random_params(dim, rng);
        double worst = 0.0;
        for (std::size_t s = 0; s < 200; ++s) {
            const GradVector g = random_grad(dim, rng);
            ledger = ledger_update(std::move(ledger), g, domain(rng), cfg.beta1);
            auto [next, st] = adam_step(theta, g, std::move(state));
            theta = std::move(next);
            state = std::move(st);
            worst = std::max(worst, max_abs_diff(ledger.total(), state.m));
        }
        check.expect(worst <= 1e-10, "ledger total departs from the first moment on stream " + std::to_string(t));
        double sum = 0.0;
        for (const auto& [id, f] : ledger_fractions(ledger)) sum += f;
        check.near(sum, 1.0, 1e-12, "ledger fractions sum");
    }

    MomentumLedger ledger(3, ids);
    std::vector<double> last;
    for (std::size_t s = 0; s < 50; ++s) {
        GradVector e(3);
        e[s % 3] = 1.0;
        ledger = ledger_update(std::move(ledger), e, static_cast<int>(s % 3), 0.9);
    }
    for (const auto& [id, f] : ledger_fractions(ledger)) last.push_back(f);
    std::sort(last.begin(), last.end(), std::greater<>());
    const std::array<double, 3> want{0.369, 0.332, 0.299};
    for (std::size_t i = 0; i < 3; ++i) {
        check.near(last[i], want[i], 0.02, "alternating-domain fraction rank " + std::to_string(i));
    }
    check.expect(last.front() - last.back() < 0.08, "alternating-domain fractions are not balanced");
}

void suite_gradcheck(Checker& check, const VerifyOptions& opt) {
    std::mt19937_64 rng(derive_seed(opt.seed, 50));
    for (std::size_t t = 0; t < 100; ++t) {
        const Activation act = t % 4 == 3 ? Activation::relu : Activation::tanh;
        const LossKind loss = t % 2 == 0 ? LossKind::softmax_cross_entropy : LossKind::squared_error;
        const NetworkSpec spec = random_network_spec(rng, act, loss);
        const ParamVector theta = random_params(spec.param_count(), rng, 0.7);
        const Batch batch = random_batch(spec, 1 + t % 6, rng);
        const GradVector analytic = backward(spec, theta, batch);
        const GradVector numeric = finite_diff_grad(spec, theta, batch, 1e-5);
        check.expect(grads_agree(analytic.span(), numeric.span(), 1e-5, 1e-8),
                     "analytic and finite-difference gradients disagree on instance " + std::to_string(t));
    }
}

using SuiteFn = std::function<void(Checker&, const VerifyOptions&)>;

const std::map<std::string, SuiteFn>& registry() {
    static const std::map<std::string, SuiteFn> suites{{"identity", suite_identity},
                                                       {"taylor", suite_taylor},
                                                       {"centroid", suite_centroid},
                                                       {"ledger", suite_ledger},
                                                       {"gradcheck", suite_gradcheck}};
    return suites;
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names{"identity", "taylor", "centroid", "ledger", "gradcheck"};
    return names;
}

SuiteReport run_verify_suite(const std::string& name, const VerifyOptions& options) {
    const auto it = registry().find(name);
    if (it == registry().end()) throw std::invalid_argument("unknown verify suite '" + name + "'");
    SuiteReport report;
    report.name = name;
    Checker check(report);
    try {
        it->second(check, options);
    } catch (const std::exception& e) {
        report.failures.push_back(std::string("suite aborted: ") + e.what());
    }
    return report;
}

}  // namespace arith::cli
