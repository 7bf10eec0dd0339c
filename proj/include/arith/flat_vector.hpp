#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arith {

struct ParamTag {};
struct GradTag {};

/// Flat 64-bit parameter-space vector. The tag keeps model parameters and
/// gradients/displacements from being mixed up at compile time.
template <class Tag>
struct FlatVector {
    std::vector<double> values;

    FlatVector() = default;
    explicit FlatVector(std::vector<double> v) : values(std::move(v)) {}
    explicit FlatVector(std::size_t n, double fill = 0.0) : values(n, fill) {}

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool empty() const noexcept { return values.empty(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    auto begin() noexcept { return values.begin(); }
    auto end() noexcept { return values.end(); }
    auto begin() const noexcept { return values.begin(); }
    auto end() const noexcept { return values.end(); }
    [[nodiscard]] std::span<const double> span() const noexcept { return values; }
    [[nodiscard]] std::span<double> span() noexcept { return values; }

    friend bool operator==(const FlatVector&, const FlatVector&) = default;
};

using ParamVector = FlatVector<ParamTag>;
using GradVector = FlatVector<GradTag>;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": layout mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
    }
}

template <class Tag>
FlatVector<Tag>& operator+=(FlatVector<Tag>& a, const FlatVector<Tag>& b) {
    require_same_size(a.size(), b.size(), "operator+=");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

template <class Tag>
FlatVector<Tag>& operator-=(FlatVector<Tag>& a, const FlatVector<Tag>& b) {
    require_same_size(a.size(), b.size(), "operator-=");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

template <class Tag>
FlatVector<Tag>& operator*=(FlatVector<Tag>& a, double s) {
    for (double& x : a.values) x *= s;
    return a;
}

template <class Tag>
FlatVector<Tag> operator+(FlatVector<Tag> a, const FlatVector<Tag>& b) {
    return a += b;
}

template <class Tag>
FlatVector<Tag> operator*(double s, FlatVector<Tag> a) {
    return a *= s;
}

inline GradVector operator-(const GradVector& a, const GradVector& b) {
    GradVector out = a;
    out -= b;
    return out;
}

inline GradVector operator-(const GradVector& a) {
    GradVector out = a;
    out *= -1.0;
    return out;
}

/// Displacement between two points in parameter space: a - b.
inline GradVector operator-(const ParamVector& a, const ParamVector& b) {
    require_same_size(a.size(), b.size(), "displacement");
    GradVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline ParamVector operator-(ParamVector p, const GradVector& g) {
    require_same_size(p.size(), g.size(), "parameter step");
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= g[i];
    return p;
}

inline ParamVector operator+(ParamVector p, const GradVector& g) {
    require_same_size(p.size(), g.size(), "parameter step");
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += g[i];
    return p;
}

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm1(std::span<const double> a);
double max_abs(std::span<const double> a);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a);

/// Running mean and standard deviation (sample, n-1) of a series.
struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};
MeanSd mean_sd(std::span<const double> xs);

}  // namespace arith
