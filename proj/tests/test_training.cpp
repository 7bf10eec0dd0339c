#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "arith/analysis.hpp"
#include "arith/io.hpp"
#include "arith/metalearn.hpp"

using namespace arith;
namespace fs = std::filesystem;

namespace {

const DomainSuite& small_suite() {
    static const DomainSuite suite = [] {
        SuiteSpec spec;
        spec.samples_per_domain = 80;
        return build_suite(spec);
    }();
    return suite;
}

MetaConfig quick_config() {
    MetaConfig c;
    c.network = {{2, 8, 2}, Activation::tanh, LossKind::softmax_cross_entropy};
    c.scheme = WeightScheme::arith_normalized(3);
    c.iterations = 30;
    c.batch_size = 16;
    return c;
}

}  // namespace

TEST_CASE("training is deterministic per seed") {
    MetaConfig c = quick_config();
    const RunResult a = train(c, small_suite());
    const RunResult b = train(c, small_suite());
    CHECK(a.final_params == b.final_params);
    CHECK(a.selected_iteration == b.selected_iteration);
    c.seed = 1;
    CHECK_FALSE(train(c, small_suite()).final_params == a.final_params);
    c.method = Method::erm;
    CHECK(train(c, small_suite()).final_params == train(c, small_suite()).final_params);
}

TEST_CASE("metric tracking does not perturb the trajectory") {
    MetaConfig c = quick_config();
    const RunResult tracked = train(c, small_suite());
    c.track_metrics = false;
    const RunResult silent = train(c, small_suite());
    CHECK(tracked.final_params == silent.final_params);
    CHECK(tracked.metrics.size() == 30);
}

TEST_CASE("averaging and gradient forms give the same training run") {
    MetaConfig c = quick_config();
    c.outer = OuterKind::direct;
    c.scheme = WeightScheme::arithmetic(2.0);
    const RunResult grad = train(c, small_suite());
    c.update_form = UpdateForm::average;
    const RunResult avg = train(c, small_suite());
    CHECK(max_abs_diff(grad.final_params.span(), avg.final_params.span()) <= 1e-10);
    c.outer = OuterKind::adam;
    CHECK_THROWS_AS(train(c, small_suite()), std::invalid_argument);
}

TEST_CASE("SWA averages the iterates after burn-in") {
    MetaConfig c = quick_config();
    c.iterations = 12;
    c.swa = SwaConfig{0.5};
    const RunResult r = train(c, small_suite());
    REQUIRE(r.swa_params.has_value());
    CHECK(r.swa_count == 6);
    REQUIRE(r.swa_eval.has_value());
    // Training is prefix-consistent, so shorter runs reproduce each iterate.
    ParamVector sum(r.final_params.size());
    for (std::size_t t = 7; t <= 12; ++t) {
        MetaConfig prefix = c;
        prefix.iterations = t;
        prefix.swa.reset();
        sum += train(prefix, small_suite()).final_params;
    }
    sum *= 1.0 / 6.0;
    CHECK(max_abs_diff(sum.span(), r.swa_params->span()) <= 1e-12);
}

TEST_CASE("selected iteration carries the best validation accuracy") {
    const RunResult r = train(quick_config(), small_suite());
    double best = 0.0;
    for (const auto& m : r.metrics) best = std::max(best, m.val_acc);
    CHECK(r.selected.val_acc == best);
    CHECK(r.metrics[r.selected_iteration].val_acc == best);
    for (std::size_t i = 0; i < r.selected_iteration; ++i) CHECK(r.metrics[i].val_acc < best);
}

TEST_CASE("ablation switches run") {
    MetaConfig c = quick_config();
    c.momentum_in_inner = true;
    c.domain_specific_sampling = false;
    c.k = 2;
    const RunResult r = train(c, small_suite());
    CHECK(all_finite(r.final_params.span()));
    CHECK(r.final_eval.val_acc >= 0.0);
}

TEST_CASE("regression suites select by validation loss") {
    SuiteSpec spec;
    spec.kind = SuiteKind::regression;
    const DomainSuite suite = build_suite(spec);
    MetaConfig c;
    c.network = {{1, 1}, Activation::tanh, LossKind::squared_error};
    c.scheme = WeightScheme::arith_normalized(3);
    c.iterations = 40;
    const RunResult r = train(c, suite);
    CHECK(std::isnan(r.final_eval.val_acc));
    double best = r.metrics.front().val_loss;
    for (const auto& m : r.metrics) best = std::min(best, m.val_loss);
    CHECK(r.selected.val_loss == best);
}

TEST_CASE("run results are saved") {
    const fs::path dir = fs::temp_directory_path() / "arith_run_test";
    fs::remove_all(dir);
    MetaConfig c = quick_config();
    c.iterations = 5;
    save_run_result(train(c, small_suite()), dir, "run");
    CHECK(fs::exists(dir / "run.json"));
    const std::string csv = read_file(dir / "run_metrics.csv");
    CHECK(csv.rfind("iter,train_loss,val_acc,target_acc\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    fs::remove_all(dir);
}

TEST_CASE("config validation") {
    MetaConfig c = quick_config();
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = quick_config();
    c.swa = SwaConfig{1.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = quick_config();
    c.inner_lr = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
