#include "arith/flat_vector.hpp"

#include <algorithm>
#include <cmath>

namespace arith {

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm1(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool all_finite(std::span<const double> a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

MeanSd mean_sd(std::span<const double> xs) {
    MeanSd r;
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return r;
}

}  // namespace arith
