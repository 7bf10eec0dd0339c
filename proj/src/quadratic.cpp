#include "arith/quadratic.hpp"

#include <algorithm>
#include <string>

namespace arith::quadratic {

AffineManifold AffineManifold::point(Vector phi) {
    AffineManifold m;
    m.dim_ = phi.size();
    m.point_ = std::move(phi);
    m.A_.resize(0, m.dim_);
    return m;
}

AffineManifold AffineManifold::subspace(Eigen::MatrixXd A, Vector b) {
    if (A.rows() != b.size()) throw std::invalid_argument("subspace: A and b row counts differ");
    if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("subspace: empty constraint matrix");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-10);
    if (lu.rank() < A.rows()) {
        throw std::invalid_argument("subspace: constraint matrix is rank deficient (rank " +
                                    std::to_string(lu.rank()) + " < " + std::to_string(A.rows()) +
                                    ")");
    }
    AffineManifold m;
    m.dim_ = A.cols();
    m.gram_.compute(A * A.transpose());
    m.A_ = std::move(A);
    m.b_ = std::move(b);
    return m;
}

Vector AffineManifold::project(const Vector& x) const {
    if (x.size() != dim_) {
        throw std::invalid_argument("project: dimension " + std::to_string(x.size()) +
                                    " does not match manifold dimension " + std::to_string(dim_));
    }
    if (is_point()) return point_;
    const Vector residual = A_ * x - b_;
    return x - A_.transpose() * gram_.solve(residual);
}

Eigen::Index QuadraticTask::dimension() const {
    if (manifolds.empty()) throw std::invalid_argument("quadratic task has no manifolds");
    const auto d = manifolds.front().dimension();
    for (const auto& m : manifolds) {
        if (m.dimension() != d) throw std::invalid_argument("manifolds have mixed ambient dimensions");
    }
    return d;
}

Vector project(const Vector& x, const AffineManifold& m) { return m.project(x); }

DistLossGrad dist_loss_grad(const Vector& x, const AffineManifold& m) {
    DistLossGrad out;
    out.grad = x - m.project(x);
    out.loss = 0.5 * out.grad.squaredNorm();
    return out;
}

std::pair<Vector, double> inner_step_exact(const Vector& theta, const AffineManifold& m, double lr) {
    if (!(lr > 0.0 && lr <= 1.0)) throw std::invalid_argument("inner_step_exact: lr must lie in (0, 1]");
    const Vector g = dist_loss_grad(theta, m).grad;
    return {theta - lr * g, lr};
}

Vector expand_interpolation(const Vector& theta1, std::span<const double> etas,
                            std::span<const Vector> projections) {
    if (etas.size() != projections.size()) {
        throw std::invalid_argument("expand_interpolation: etas and projections differ in length");
    }
    const std::size_t n = etas.size();
    double keep_all = 1.0;
    for (double e : etas) keep_all *= 1.0 - e;
    Vector out = keep_all * theta1;
    for (std::size_t j = 0; j < n; ++j) {
        double decay = 1.0;
        for (std::size_t k = j + 1; k < n; ++k) decay *= 1.0 - etas[k];
        out += decay * etas[j] * projections[j];
    }
    return out;
}

InterpolationTrace run_inner_pass(const Vector& theta, const QuadraticTask& task,
                                  std::span<const std::size_t> order, double lr) {
    InterpolationTrace trace;
    trace.thetas.push_back(theta);
    for (std::size_t d : order) {
        if (d >= task.size()) throw std::invalid_argument("run_inner_pass: domain index out of range");
        const Vector& cur = trace.thetas.back();
        trace.projections.push_back(task.manifolds[d].project(cur));
        auto [next, eta] = inner_step_exact(cur, task.manifolds[d], lr);
        trace.etas.push_back(eta);
        trace.thetas.push_back(std::move(next));
    }
    return trace;
}

Vector outer_step(const Vector& theta, const InterpolationTrace& trace, std::span<const double> w) {
    if (w.size() + 1 != trace.thetas.size()) {
        throw std::invalid_argument("outer_step: weight count does not match the inner pass");
    }
    Vector out = theta;
    for (std::size_t i = 0; i < w.size(); ++i) out -= w[i] * (trace.thetas[i] - trace.thetas[i + 1]);
    return out;
}

FixedPoint fixed_point(const QuadraticTask& task, std::span<const double> w, double lr,
                       std::span<const std::size_t> order, std::size_t max_iters,
                       const Vector& start, double tol) {
    if (start.size() != task.dimension()) throw std::invalid_argument("fixed_point: start has wrong dimension");
    FixedPoint fp{start, 0, 0.0};
    for (std::size_t it = 1; it <= max_iters; ++it) {
        const InterpolationTrace trace = run_inner_pass(fp.theta, task, order, lr);
        Vector next = outer_step(fp.theta, trace, w);
        fp.displacement = (next - fp.theta).norm();
        fp.theta = std::move(next);
        fp.iterations = it;
        if (fp.displacement < tol) return fp;
    }
    throw ConvergenceError("fixed_point did not converge in " + std::to_string(max_iters) +
                               " iterations (last displacement " + std::to_string(fp.displacement) + ")",
                           fp.displacement, max_iters);
}

FixedPoint fixed_point(const QuadraticTask& task, const WeightScheme& scheme, double lr,
                       std::span<const std::size_t> order, std::size_t max_iters,
                       const Vector& start, double tol) {
    const std::vector<double> w = weights(scheme, order.size());
    return fixed_point(task, w, lr, order, max_iters, start, tol);
}

double CentroidDistance::spread() const {
    if (per_domain.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(per_domain.begin(), per_domain.end());
    return *hi - *lo;
}

CentroidDistance centroid_distance(const Vector& theta, const QuadraticTask& task) {
    const auto d = task.dimension();
    CentroidDistance out;
    Vector centre = Vector::Zero(d);
    for (const auto& m : task.manifolds) {
        const Vector p = m.project(theta);
        out.per_domain.push_back((theta - p).norm());
        centre += p;
    }
    centre /= static_cast<double>(task.size());
    out.distance = (theta - centre).norm();
    return out;
}

Vector point_centroid(const QuadraticTask& task) {
    const Vector origin = Vector::Zero(task.dimension());
    Vector c = origin;
    for (const auto& m : task.manifolds) {
        if (!m.is_point()) throw std::invalid_argument("point_centroid: task has a non-point manifold");
        c += m.project(origin);
    }
    return c / static_cast<double>(task.size());
}

}  // namespace arith::quadratic
