#include <random>

#include "doctest.h"

#include "arith/quadratic.hpp"

using namespace arith;
using namespace arith::quadratic;

namespace {

Vector gaussian(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

QuadraticTask pair_task() {
    return {{AffineManifold::point(Vector::Constant(1, 1.0)), AffineManifold::point(Vector::Constant(1, -1.0))}};
}

}  // namespace

TEST_CASE("projection onto a subspace matches the pseudo-inverse formula") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index dim = 3 + t % 4;
        const Eigen::Index rows = 1 + t % 3;
        Eigen::MatrixXd A(rows, dim);
        for (Eigen::Index r = 0; r < rows; ++r) A.row(r) = gaussian(dim, rng).transpose();
        const Vector b = gaussian(rows, rng);
        const AffineManifold m = AffineManifold::subspace(A, b);
        const Vector x = gaussian(dim, rng);
        const Vector p = m.project(x);
        const Eigen::MatrixXd pinv = A.completeOrthogonalDecomposition().pseudoInverse();
        const Vector want = x - pinv * (A * x - b);
        CHECK((p - want).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((A * p - b).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((m.project(p) - p).lpNorm<Eigen::Infinity>() <= 1e-12);
        const Vector y = m.project(gaussian(dim, rng));
        CHECK(std::abs((x - p).dot(y - p)) <= 1e-10);
    }
}

TEST_CASE("manifold construction") {
    Eigen::MatrixXd A(2, 3);
    A << 1, 2, 3, 2, 4, 6;
    CHECK_THROWS_AS(AffineManifold::subspace(A, Vector::Zero(2)), std::invalid_argument);
    CHECK_THROWS_AS(AffineManifold::subspace(Eigen::MatrixXd::Identity(2, 3), Vector::Zero(3)), std::invalid_argument);
    const Vector phi = Vector::Constant(3, 0.5);
    const AffineManifold pt = AffineManifold::point(phi);
    CHECK(pt.is_point());
    CHECK(pt.project(Vector::Zero(3)) == phi);
}

TEST_CASE("distance loss and exact inner step") {
    const AffineManifold m = AffineManifold::point(Vector::Constant(2, 1.0));
    const Vector x = Vector::Constant(2, 3.0);
    const DistLossGrad dl = dist_loss_grad(x, m);
    CHECK(dl.loss == doctest::Approx(4.0));
    CHECK(dl.grad(0) == doctest::Approx(2.0));
    const auto [next, eta] = inner_step_exact(x, m, 0.25);
    CHECK(eta == 0.25);
    CHECK(next(0) == doctest::Approx(2.5));
    CHECK((next - (x - 0.25 * dl.grad)).norm() <= 1e-15);
}

TEST_CASE("closed-form unrolling matches the sequential pass") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        QuadraticTask task;
        for (int i = 0; i < 4; ++i) task.manifolds.push_back(AffineManifold::point(gaussian(3, rng)));
        const std::vector<std::size_t> order{3, 1, 0, 2};
        const Vector theta = gaussian(3, rng);
        const InterpolationTrace tr = run_inner_pass(theta, task, order, 0.3 + 0.05 * t);
        REQUIRE(tr.thetas.size() == 5);
        CHECK((expand_interpolation(theta, tr.etas, tr.projections) - tr.thetas.back()).norm() <= 1e-12);
    }
}

TEST_CASE("outer step is theta minus weighted displacements") {
    const QuadraticTask task = pair_task();
    const std::vector<std::size_t> order{0, 1};
    const Vector theta = Vector::Zero(1);
    const InterpolationTrace tr = run_inner_pass(theta, task, order, 0.5);
    CHECK(tr.thetas[1](0) == doctest::Approx(0.5));
    CHECK(tr.thetas[2](0) == doctest::Approx(-0.25));
    const std::vector<double> w{2.0 / 3.0, 1.0 / 3.0};
    // (theta + theta_1 + theta_2) / 3
    CHECK(outer_step(theta, tr, w)(0) == doctest::Approx(0.25 / 3.0));
}

TEST_CASE("two-point fixed points") {
    const QuadraticTask task = pair_task();
    const std::vector<std::size_t> order{0, 1};
    const Vector start = Vector::Zero(1);
    // Arith (eps = 1): theta = (theta + (theta + 1)/2 + (theta - 1)/4) / 3 gives 0.2.
    const FixedPoint arith = fixed_point(task, WeightScheme::arithmetic(1.0), 0.5, order, 100000, start, 1e-14);
    CHECK(std::abs(arith.theta(0) - 0.2) <= 1e-12);
    // Full interpolation: theta = (theta - 1)/4 gives -1/3.
    const FixedPoint fish = fixed_point(task, WeightScheme::constant(1.0), 0.5, order, 100000, start, 1e-14);
    CHECK(std::abs(fish.theta(0) + 1.0 / 3.0) <= 1e-12);
    // Contraction factor 0.25 per outer step.
    CHECK(fish.iterations < arith.iterations);
}

TEST_CASE("exact projections: centroid for arithmetic, last optimum for full interpolation") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> eps(0.1, 10.0);
    for (std::size_t n : {2u, 3u, 5u}) {
        for (int t = 0; t < 5; ++t) {
            QuadraticTask task;
            for (std::size_t i = 0; i < n; ++i) task.manifolds.push_back(AffineManifold::point(gaussian(2, rng)));
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            const Vector start = gaussian(2, rng);
            Vector mean = Vector::Zero(2);
            for (const auto& m : task.manifolds) mean += m.project(start);
            mean /= static_cast<double>(n);
            CHECK((point_centroid(task) - mean).norm() <= 1e-15);
            const auto a = fixed_point(task, WeightScheme::arithmetic(eps(rng)), 1.0, order, 100000, start, 1e-14);
            CHECK((a.theta - mean).lpNorm<Eigen::Infinity>() <= 1e-12);
            CHECK(centroid_distance(a.theta, task).distance <= 1e-12);
            const auto f = fixed_point(task, WeightScheme::constant(1.0), 1.0, order, 100000, start, 1e-14);
            CHECK((f.theta - task.manifolds.back().project(start)).lpNorm<Eigen::Infinity>() <= 1e-12);
        }
    }
}

TEST_CASE("centroid distance and spread") {
    const QuadraticTask task = pair_task();
    const CentroidDistance cd = centroid_distance(Vector::Constant(1, 0.5), task);
    CHECK(cd.distance == doctest::Approx(0.5));
    CHECK(cd.per_domain[0] == doctest::Approx(0.5));
    CHECK(cd.per_domain[1] == doctest::Approx(1.5));
    CHECK(cd.spread() == doctest::Approx(1.0));
}

TEST_CASE("non-convergence is reported") {
    const QuadraticTask task = pair_task();
    const std::vector<std::size_t> order{0, 1};
    try {
        (void)fixed_point(task, WeightScheme::arithmetic(1.0), 0.5, order, 3, Vector::Constant(1, 50.0), 1e-14);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 3);
        CHECK(e.displacement() > 1e-14);
    }
}
