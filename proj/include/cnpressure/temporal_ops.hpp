#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cnpressure/exceptions.hpp"
#include "cnpressure/time_mesh.hpp"

namespace cnpressure {

// Grid functions are generic over the coefficient type V. Anything with vector-space
// operators works; in practice V is double or Eigen::VectorXd.

/// Continuous piecewise-linear function in time: one value per node t_0..t_N.
template <class V>
class GridFunctionCG1 {
public:
    GridFunctionCG1(TimeMesh mesh, std::vector<V> values) : mesh_(std::move(mesh)), values_(std::move(values)) {
        if (values_.size() != mesh_.intervals() + 1)
            throw InvalidArgument("cG1 function needs N+1 nodal values, got " + std::to_string(values_.size()));
    }

    const TimeMesh& mesh() const noexcept { return mesh_; }
    const std::vector<V>& values() const noexcept { return values_; }
    const V& at_node(std::size_t n) const { return values_.at(n); }

    /// Affine interpolant on the interval containing t.
    V operator()(double t) const {
        const std::size_t n = mesh_.interval_containing(t);
        const double t0 = mesh_.node(n - 1);
        const double theta = (t - t0) / mesh_.step(n);
        return V((1.0 - theta) * values_[n - 1] + theta * values_[n]);
    }

private:
    TimeMesh mesh_;
    std::vector<V> values_;
};

/// Piecewise-constant function in time: one value per interval I^1..I^N.
template <class V>
class GridFunctionDG0 {
public:
    GridFunctionDG0(TimeMesh mesh, std::vector<V> values) : mesh_(std::move(mesh)), values_(std::move(values)) {
        if (values_.size() != mesh_.intervals())
            throw InvalidArgument("dG0 function needs N interval values, got " + std::to_string(values_.size()));
    }

    const TimeMesh& mesh() const noexcept { return mesh_; }
    const std::vector<V>& values() const noexcept { return values_; }
    /// Value on I^n, n = 1..N.
    const V& on_interval(std::size_t n) const {
        mesh_.check_interval(n);
        return values_[n - 1];
    }

    /// Value on the interval (t_{n-1}, t_n] containing t; no interpolation.
    const V& operator()(double t) const { return values_[mesh_.interval_containing(t) - 1]; }

private:
    TimeMesh mesh_;
    std::vector<V> values_;
};

template <class V>
using TimeCallable = std::function<V(double)>;

namespace detail {

struct GaussRule {
    std::vector<double> points;   // on [0, 1]
    std::vector<double> weights;  // sum to 1
};

inline GaussRule gauss_legendre_unit(int order) {
    auto map = [](std::vector<double> x, std::vector<double> w) {
        GaussRule r;
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.points.push_back(0.5 * (x[i] + 1.0));
            r.weights.push_back(0.5 * w[i]);
        }
        return r;
    };
    switch (order) {
    case 1: return map({0.0}, {2.0});
    case 2: {
        const double a = 1.0 / std::sqrt(3.0);
        return map({-a, a}, {1.0, 1.0});
    }
    case 3: {
        const double a = std::sqrt(0.6);
        return map({-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0});
    }
    case 4: {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
        return map({-b, -a, a, b}, {wb, wa, wa, wb});
    }
    case 5: {
        const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
        const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
        return map({-b, -a, 0.0, a, b}, {wb, wa, 128.0 / 225.0, wa, wb});
    }
    default: throw InvalidArgument("Gauss order must be in 1..5, got " + std::to_string(order));
    }
}

}  // namespace detail

/// Integral of u over [a, b] with an n-point Gauss rule.
template <class V>
V integrate_gauss(const TimeCallable<V>& u, double a, double b, int order = 3) {
    const auto rule = detail::gauss_legendre_unit(order);
    const double h = b - a;
    V sum = h * rule.weights[0] * u(a + h * rule.points[0]);
    for (std::size_t q = 1; q < rule.points.size(); ++q) sum = V(sum + h * rule.weights[q] * u(a + h * rule.points[q]));
    return sum;
}

/// i_k u: nodal interpolation.
template <class V>
GridFunctionCG1<V> interpolate_nodal(const TimeCallable<V>& u, const TimeMesh& mesh) {
    std::vector<V> values;
    values.reserve(mesh.intervals() + 1);
    for (double t : mesh.nodes()) values.push_back(u(t));
    return GridFunctionCG1<V>(mesh, std::move(values));
}

/// a_k u: interval means, Gauss quadrature with `quadrature_order` points per interval.
template <class V>
GridFunctionDG0<V> average(const TimeCallable<V>& u, const TimeMesh& mesh, int quadrature_order = 3) {
    if (quadrature_order < 3) throw InvalidArgument("averaging needs at least 3 Gauss points per interval");
    std::vector<V> values;
    values.reserve(mesh.intervals());
    for (std::size_t n = 1; n <= mesh.intervals(); ++n) {
        const double k = mesh.step(n);
        values.push_back(V((1.0 / k) * integrate_gauss(u, mesh.node(n - 1), mesh.node(n), quadrature_order)));
    }
    return GridFunctionDG0<V>(mesh, std::move(values));
}

/// a_k of a cG1 function is exact: the mean of the endpoint values.
template <class V>
GridFunctionDG0<V> average(const GridFunctionCG1<V>& u) {
    std::vector<V> values;
    values.reserve(u.mesh().intervals());
    for (std::size_t n = 1; n <= u.mesh().intervals(); ++n)
        values.push_back(V(0.5 * (u.at_node(n - 1) + u.at_node(n))));
    return GridFunctionDG0<V>(u.mesh(), std::move(values));
}

/// a_k is a projection: identity on dG0.
template <class V>
GridFunctionDG0<V> average(const GridFunctionDG0<V>& u) {
    return u;
}

/// m_k u: constant continuation of midpoint values.
template <class V>
GridFunctionDG0<V> midpoint_sample(const TimeCallable<V>& u, const TimeMesh& mesh) {
    std::vector<V> values;
    values.reserve(mesh.intervals());
    for (std::size_t n = 1; n <= mesh.intervals(); ++n) values.push_back(u(mesh.midpoint(n)));
    return GridFunctionDG0<V>(mesh, std::move(values));
}

/// Interval-wise derivative of a cG1 function, (u^n - u^{n-1}) / k_n.
template <class V>
GridFunctionDG0<V> time_derivative(const GridFunctionCG1<V>& u) {
    std::vector<V> values;
    values.reserve(u.mesh().intervals());
    for (std::size_t n = 1; n <= u.mesh().intervals(); ++n)
        values.push_back(V((1.0 / u.mesh().step(n)) * (u.at_node(n) - u.at_node(n - 1))));
    return GridFunctionDG0<V>(u.mesh(), std::move(values));
}

/// Pointwise product with a dG0 weight.
template <class V>
GridFunctionDG0<V> weighted(const GridFunctionDG0<V>& f, const SmoothingWeight& w) {
    std::vector<V> values;
    values.reserve(f.mesh().intervals());
    for (std::size_t n = 1; n <= f.mesh().intervals(); ++n) values.push_back(V(w(n) * f.on_interval(n)));
    return GridFunctionDG0<V>(f.mesh(), std::move(values));
}

enum class TemporalNorm { L2, Linf };

/// Temporal window (t_begin, t_end], i.e. intervals begin+1..end.
struct Window {
    std::size_t begin = 0;
    std::size_t end = 0;

    static Window all(const TimeMesh& mesh) { return {0, mesh.intervals()}; }
    static Window after(const TimeMesh& mesh, std::size_t n0) { return {n0, mesh.intervals()}; }

    void check(const TimeMesh& mesh) const {
        if (end <= begin) throw InvalidArgument("empty temporal window");
        if (end > mesh.intervals()) throw InvalidArgument("temporal window exceeds mesh");
    }
};

/// Marks a spatial norm as induced by an inner product, enabling exact cG1 L2 integration.
template <class Dot>
struct InnerProduct {
    Dot dot;
};
template <class Dot>
InnerProduct(Dot) -> InnerProduct<Dot>;

/// ||tau_k^alpha f||_{L^p(window; X)} for a dG0 function.
template <class V, class Norm>
double weighted_temporal_norm(const GridFunctionDG0<V>& f, const SmoothingWeight& weight, TemporalNorm p,
                              const Norm& spatial_norm, Window window) {
    const TimeMesh& mesh = f.mesh();
    window.check(mesh);
    double acc = 0.0;
    for (std::size_t n = window.begin + 1; n <= window.end; ++n) {
        const double q = weight(n) * spatial_norm(f.on_interval(n));
        if (p == TemporalNorm::L2)
            acc += mesh.step(n) * q * q;
        else
            acc = std::max(acc, q);
    }
    return p == TemporalNorm::L2 ? std::sqrt(acc) : acc;
}

/// cG1 variant for a general norm: 3-point Gauss on the squared norm of the affine interpolant.
/// The L-infinity norm is attained at nodes by convexity.
template <class V, class Norm>
double weighted_temporal_norm(const GridFunctionCG1<V>& f, const SmoothingWeight& weight, TemporalNorm p,
                              const Norm& spatial_norm, Window window) {
    const TimeMesh& mesh = f.mesh();
    window.check(mesh);
    double acc = 0.0;
    const auto rule = detail::gauss_legendre_unit(3);
    for (std::size_t n = window.begin + 1; n <= window.end; ++n) {
        const double w = weight(n);
        const V& a = f.at_node(n - 1);
        const V& b = f.at_node(n);
        if (p == TemporalNorm::L2) {
            double sq = 0.0;
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const double theta = rule.points[q];
                const double v = spatial_norm(V((1.0 - theta) * a + theta * b));
                sq += rule.weights[q] * v * v;
            }
            acc += mesh.step(n) * w * w * sq;
        } else {
            acc = std::max({acc, w * spatial_norm(a), w * spatial_norm(b)});
        }
    }
    return p == TemporalNorm::L2 ? std::sqrt(acc) : acc;
}

/// cG1 variant for an inner-product norm: exact integration of the squared affine interpolant,
/// k_n/3 (|a|^2 + (a,b) + |b|^2) per interval.
template <class V, class Dot>
double weighted_temporal_norm(const GridFunctionCG1<V>& f, const SmoothingWeight& weight, TemporalNorm p,
                              const InnerProduct<Dot>& ip, Window window) {
    const TimeMesh& mesh = f.mesh();
    window.check(mesh);
    double acc = 0.0;
    for (std::size_t n = window.begin + 1; n <= window.end; ++n) {
        const double w = weight(n);
        const V& a = f.at_node(n - 1);
        const V& b = f.at_node(n);
        const double aa = ip.dot(a, a);
        const double bb = ip.dot(b, b);
        if (p == TemporalNorm::L2)
            acc += mesh.step(n) / 3.0 * w * w * (aa + ip.dot(a, b) + bb);
        else
            acc = std::max({acc, w * std::sqrt(aa), w * std::sqrt(bb)});
    }
    return p == TemporalNorm::L2 ? std::sqrt(acc) : acc;
}

}  // namespace cnpressure
