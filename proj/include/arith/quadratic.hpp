#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arith/metalearn.hpp"

namespace arith::quadratic {

using Vector = Eigen::VectorXd;

/// Affine set {x : A x = b} with A of full row rank, or a single point.
class AffineManifold {
public:
    static AffineManifold point(Vector phi);
    /// Throws std::invalid_argument when A is rank deficient.
    static AffineManifold subspace(Eigen::MatrixXd A, Vector b);

    [[nodiscard]] Vector project(const Vector& x) const;
    [[nodiscard]] Eigen::Index dimension() const { return dim_; }
    [[nodiscard]] bool is_point() const { return A_.rows() == 0; }

private:
    AffineManifold() = default;

    Eigen::Index dim_ = 0;
    Vector point_;
    Eigen::MatrixXd A_;
    Vector b_;
    Eigen::LDLT<Eigen::MatrixXd> gram_;  // factorisation of A A^T
};

struct QuadraticTask {
    std::vector<AffineManifold> manifolds;

    [[nodiscard]] Eigen::Index dimension() const;
    [[nodiscard]] std::size_t size() const { return manifolds.size(); }
};

Vector project(const Vector& x, const AffineManifold& m);

struct DistLossGrad {
    double loss = 0.0;
    Vector grad;
};

/// loss = 0.5 * ||x - P(x)||^2, grad = x - P(x).
DistLossGrad dist_loss_grad(const Vector& x, const AffineManifold& m);

/// One SGD step on the half squared distance: (1 - lr) x + lr P(x).
/// Returns the new point and the interpolation coefficient (equal to lr).
std::pair<Vector, double> inner_step_exact(const Vector& theta, const AffineManifold& m, double lr);

/// Closed-form unrolling of successive interpolations toward `projections`:
///   prod_j (1 - eta_j) theta_1 + sum_j prod_{k>j} (1 - eta_k) eta_j Phi_j
Vector expand_interpolation(const Vector& theta1, std::span<const double> etas,
                            std::span<const Vector> projections);

struct InterpolationTrace {
    std::vector<double> etas;
    std::vector<Vector> projections;
    std::vector<Vector> thetas;
};

InterpolationTrace run_inner_pass(const Vector& theta, const QuadraticTask& task,
                                  std::span<const std::size_t> order, double lr);

/// One outer update from an inner pass: theta - sum_i w_i (theta_i - theta_{i+1}).
Vector outer_step(const Vector& theta, const InterpolationTrace& trace, std::span<const double> w);

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double displacement, std::size_t iterations)
        : std::runtime_error(what), displacement_(displacement), iterations_(iterations) {}
    [[nodiscard]] double displacement() const { return displacement_; }
    [[nodiscard]] std::size_t iterations() const { return iterations_; }

private:
    double displacement_;
    std::size_t iterations_;
};

struct FixedPoint {
    Vector theta;
    std::size_t iterations = 0;
    double displacement = 0.0;
};

/// Iterates {inner pass in `order` -> outer update} from `start` until the
/// outer step moves less than `tol`. Throws ConvergenceError after max_iters.
FixedPoint fixed_point(const QuadraticTask& task, std::span<const double> weights, double lr,
                       std::span<const std::size_t> order, std::size_t max_iters,
                       const Vector& start, double tol = 1e-12);
FixedPoint fixed_point(const QuadraticTask& task, const WeightScheme& scheme, double lr,
                       std::span<const std::size_t> order, std::size_t max_iters,
                       const Vector& start, double tol = 1e-12);

struct CentroidDistance {
    double distance = 0.0;
    std::vector<double> per_domain;

    [[nodiscard]] double spread() const;
};

/// Distance from theta to the mean of its projections onto every manifold,
/// plus the per-domain distances D(theta, W_i).
CentroidDistance centroid_distance(const Vector& theta, const QuadraticTask& task);

/// Mean of point-form manifolds.
Vector point_centroid(const QuadraticTask& task);

}  // namespace arith::quadratic
