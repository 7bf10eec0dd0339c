#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"

#include "arith/analysis.hpp"
#include "arith/metalearn.hpp"
#include "arith/random_instances.hpp"

using namespace arith;

namespace {

void check_weights(const std::vector<double>& got, const std::vector<double>& want) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-15);
}

InnerTrace trace_from_thetas(std::vector<std::vector<double>> points) {
    InnerTrace t;
    for (auto& p : points) t.thetas.emplace_back(std::move(p));
    for (std::size_t i = 0; i + 1 < t.thetas.size(); ++i) t.grads.push_back(t.thetas[i] - t.thetas[i + 1]);
    return t;
}

}  // namespace

TEST_CASE("arithmetic weights") {
    check_weights(weights(WeightScheme::arithmetic(3.0), 3), {1.0 / 2, 1.0 / 3, 1.0 / 6});
    check_weights(weights(WeightScheme::arithmetic(10.0), 5), {1.0 / 3, 4.0 / 15, 1.0 / 5, 2.0 / 15, 1.0 / 15});
    check_weights(weights(WeightScheme::arithmetic(1.0), 3), {3.0 / 4, 1.0 / 2, 1.0 / 4});
    check_weights(weights(WeightScheme::constant(0.2), 4), {0.2, 0.2, 0.2, 0.2});
    check_weights(weights(WeightScheme::explicit_list({0.7, 0.1}), 2), {0.7, 0.1});
}

TEST_CASE("presets") {
    for (std::size_t n : {2u, 3u, 5u, 8u}) {
        const auto a = weights(WeightScheme::arith_normalized(n), n);
        const auto f = weights(WeightScheme::fish_normalized(n), n);
        CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        const auto as = weights(WeightScheme::arith_scaled(n), n);
        const auto fs = weights(WeightScheme::fish_scaled(n), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(as[i] == doctest::Approx(1.5 * a[i]).epsilon(1e-14));
            CHECK(fs[i] == doctest::Approx(1.5 * f[i]).epsilon(1e-14));
        }
    }
    CHECK(WeightScheme::arith_normalized(3) == WeightScheme::arithmetic(3.0));
    CHECK(WeightScheme::arith_scaled(3) == WeightScheme::arithmetic(1.0));
}

TEST_CASE("invalid weight requests") {
    CHECK_THROWS_AS(weights(WeightScheme::arithmetic(1.0), 0), std::invalid_argument);
    CHECK_THROWS_AS(weights(WeightScheme::arithmetic(-3.0), 3), std::invalid_argument);
    CHECK_THROWS_AS(weights(WeightScheme::constant(0.0), 3), std::invalid_argument);
    CHECK_THROWS_AS(weights(WeightScheme::explicit_list({1.0}), 3), std::invalid_argument);
    CHECK_THROWS_AS(parse_scheme_kind("geometric"), std::invalid_argument);
}

TEST_CASE("hand-computed outer updates") {
    const InnerTrace t = trace_from_thetas({{0.0}, {-1.0}, {-3.0}});
    const ParamVector theta = t.thetas[0];
    CHECK(outer_update_gradform(theta, t, WeightScheme::arithmetic(1.0))[0] == doctest::Approx(-4.0 / 3.0));
    CHECK(outer_update_avgform(theta, t, 1.0)[0] == doctest::Approx(-4.0 / 3.0));
    // Full interpolation lands on the last inner model.
    CHECK(outer_update_gradform(theta, t, WeightScheme::constant(1.0))[0] == doctest::Approx(-3.0));
    CHECK(outer_update_gradform(theta, t, WeightScheme::constant(0.5))[0] == doctest::Approx(-1.5));
    CHECK_THROWS_AS(meta_gradient(t, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("gradient and averaging forms coincide on random traces") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> eps(0.1, 10.0);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = std::array<std::size_t, 3>{2, 3, 5}[t % 3];
        const double e = eps(rng);
        const ParamVector theta = random_params(1 + t * 7, rng);
        const InnerTrace trace = random_trace(theta, n, rng);
        const ParamVector g = outer_update_gradform(theta, trace, WeightScheme::arithmetic(e));
        const ParamVector a = outer_update_avgform(theta, trace, e);
        CHECK(max_abs_diff(g.span(), a.span()) <= 1e-12);
    }
}

TEST_CASE("running SWA mean equals the batch mean") {
    std::mt19937_64 rng(4);
    std::vector<ParamVector> xs;
    for (int i = 0; i < 25; ++i) xs.push_back(random_params(9, rng));
    ParamVector avg;
    std::size_t count = 0;
    for (const auto& x : xs) std::tie(avg, count) = swa_accumulate(avg, count, x);
    CHECK(count == 25);
    for (std::size_t j = 0; j < 9; ++j) {
        double s = 0.0;
        for (const auto& x : xs) s += x[j];
        CHECK(avg[j] == doctest::Approx(s / 25.0).epsilon(1e-13));
    }
}

TEST_CASE("inner loop replays plain SGD on sampled batches") {
    const DomainSuite suite = build_suite(SuiteSpec{});
    const auto sources = suite.train_sets();
    const NetworkSpec spec{{2, 8, 2}, Activation::tanh, LossKind::softmax_cross_entropy};
    const ParamVector theta = init_params(spec, 2);
    const std::vector<std::size_t> order{2, 0, 1};
    for (std::size_t k : {1u, 3u}) {
        SamplerState sampler(9);
        SamplerState replay = sampler;
        InnerLoopOptions opt;
        opt.k = k;
        opt.learning_rate = 0.2;
        opt.batch_size = 16;
        const InnerTrace trace = inner_loop(spec, theta, sources, order, opt, sampler);
        REQUIRE(trace.n() == 3);
        CHECK(trace.domain_order == order);
        ParamVector p = theta;
        for (std::size_t i = 0; i < 3; ++i) {
            const ParamVector start = p;
            for (std::size_t s = 0; s < k; ++s) {
                const Batch b = sample_batch(replay, sources[order[i]], 16);
                CHECK(b.domain_id == static_cast<int>(order[i]));
                p = sgd_step(p, backward(spec, p, b), {0.2});
            }
            CHECK(max_abs_diff(trace.thetas[i + 1].span(), p.span()) == 0.0);
            CHECK(max_abs_diff(trace.grads[i].span(), (start - p).span()) == 0.0);
        }
    }
}

TEST_CASE("inner loop rejects bad orders") {
    const DomainSuite suite = build_suite(SuiteSpec{});
    const auto sources = suite.train_sets();
    const NetworkSpec spec{{2, 4, 2}, Activation::tanh, LossKind::softmax_cross_entropy};
    SamplerState s(0);
    const std::vector<std::size_t> dup{0, 0, 1};
    const std::vector<std::size_t> out_of_range{0, 3};
    CHECK_THROWS_AS(inner_loop(spec, init_params(spec, 0), sources, dup, {}, s), std::invalid_argument);
    CHECK_THROWS_AS(inner_loop(spec, init_params(spec, 0), sources, out_of_range, {}, s), std::invalid_argument);
}

TEST_CASE("shuffled domain orders are uniform over positions") {
    std::mt19937_64 rng(12);
    std::array<std::array<int, 3>, 3> counts{};
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
        const auto order = domain_order(rng, 3, true);
        CHECK(std::set<std::size_t>(order.begin(), order.end()).size() == 3);
        for (std::size_t pos = 0; pos < 3; ++pos) ++counts[order[pos]][pos];
    }
    for (const auto& row : counts) {
        for (int c : row) CHECK(std::abs(c - draws / 3) < 500);
    }
    CHECK(domain_order(rng, 4, false) == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("first-order residual: quadratic hand case") {
    // Linear unit with x = 0, so only the bias moves: L_i = 0.5 (b - c_i)^2.
    // One step on c = +1 takes b to 0.1, L_2 = 0.605 against the prediction 0.6.
    const NetworkSpec spec{{1, 1}, Activation::tanh, LossKind::squared_error};
    const ParamVector theta(std::vector<double>{0.7, 0.0});
    std::vector<Batch> batches;
    for (double c : {1.0, -1.0}) {
        Batch b;
        b.inputs = Matrix(1, 1, 0.0);
        b.targets = RealTargets(1, 1, c);
        batches.push_back(b);
    }
    const std::vector<std::size_t> order{0, 1};
    const TaylorResidual r = taylor_residual(spec, theta, batches, order, 0.1, 2);
    CHECK(std::abs(r.residual - 0.005) <= 1e-12);
    CHECK(r.loss_at_target == doctest::Approx(0.605));
    CHECK(r.prediction == doctest::Approx(0.6));
    CHECK(taylor_residual(spec, theta, batches, order, 0.1, 1).residual == 0.0);
}

TEST_CASE("first-order residual shrinks quadratically") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 10; ++t) {
        const NetworkSpec spec = random_network_spec(rng, Activation::tanh, LossKind::squared_error);
        const ParamVector theta = init_params(spec, rng());
        std::vector<Batch> batches;
        for (int d = 0; d < 3; ++d) batches.push_back(random_batch(spec, 32, rng, d));
        const std::vector<std::size_t> order{0, 1, 2};
        for (auto [step, alpha] : {std::pair<std::size_t, double>{2, 0.1}, {2, 0.05}, {3, 1e-3}}) {
            const double r1 = taylor_residual(spec, theta, batches, order, alpha, step).residual;
            const double r2 = taylor_residual(spec, theta, batches, order, alpha / 2, step).residual;
            CHECK(r1 / r2 >= 3.5);
            CHECK(r1 / r2 <= 4.5);
        }
    }
}

TEST_CASE("first-order residual argument checks") {
    const NetworkSpec relu{{1, 3, 1}, Activation::relu, LossKind::squared_error};
    std::mt19937_64 rng(0);
    const std::vector<Batch> b{random_batch(relu, 4, rng)};
    const std::vector<std::size_t> order{0};
    CHECK_THROWS_AS(taylor_residual(relu, init_params(relu, 0), b, order, 0.1, 1), std::invalid_argument);
    const NetworkSpec lin{{1, 1}, Activation::tanh, LossKind::squared_error};
    CHECK_THROWS_AS(taylor_residual(lin, init_params(lin, 0), b, order, 0.1, 2), std::invalid_argument);
}

TEST_CASE("ensemble gap") {
    std::mt19937_64 rng(5);
    const NetworkSpec lin{{3, 2}, Activation::tanh, LossKind::squared_error};
    std::vector<ParamVector> models;
    for (int i = 0; i < 3; ++i) models.push_back(random_params(lin.param_count(), rng));
    CHECK(ensemble_gap(lin, models, random_batch(lin, 10, rng)) <= 1e-12);

    const NetworkSpec mlp{{3, 6, 2}, Activation::tanh, LossKind::squared_error};
    const ParamVector centre = init_params(mlp, 1);
    std::vector<GradVector> dirs;
    for (int i = 0; i < 3; ++i) dirs.push_back(random_grad(mlp.param_count(), rng));
    const Batch batch = random_batch(mlp, 16, rng);
    auto gap = [&](double s) {
        std::vector<ParamVector> ms;
        for (const auto& d : dirs) ms.push_back(centre + s * d);
        return ensemble_gap(mlp, ms, batch);
    };
    CHECK(gap(0.02) > 0.0);
    CHECK(gap(0.02) / gap(0.01) == doctest::Approx(4.0).epsilon(0.15));
    CHECK_THROWS_AS(ensemble_gap(lin, std::vector<ParamVector>{models[0]}, random_batch(lin, 2, rng)),
                    std::invalid_argument);
}

TEST_CASE("derived seeds separate streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 10; ++s) {
        for (std::uint64_t stream = 0; stream < 10; ++stream) seen.insert(derive_seed(s, stream));
    }
    CHECK(seen.size() == 100);
    CHECK(derive_seed(3, 1) == derive_seed(3, 1));
}
