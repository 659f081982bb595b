#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>

#include "cnpressure/fem/mesh.hpp"

namespace cnpressure {

using SpatialField = std::function<Eigen::Vector2d(const fem::Point&)>;
using SpaceTimeField = std::function<Eigen::Vector2d(const fem::Point&, double)>;

namespace problems {

/// (-sin(4x+y) y, cos(x-4y) x)
inline Eigen::Vector2d swirl(const fem::Point& p) {
    const double x = p.x(), y = p.y();
    return {-std::sin(4 * x + y) * y, std::cos(x - 4 * y) * x};
}

/// amplitude * t^2 e^{-t} * swirl(x): vanishes to second order at t = 0.
inline SpaceTimeField ramped_swirl(double amplitude = 0.2) {
    return [amplitude](const fem::Point& p, double t) -> Eigen::Vector2d {
        return amplitude * t * t * std::exp(-t) * swirl(p);
    };
}

/// amplitude * sgn(x) sgn(y) * swirl(x): discontinuous across the axes.
inline SpatialField quadrant_swirl(double amplitude = 0.2) {
    return [amplitude](const fem::Point& p) -> Eigen::Vector2d {
        const double sx = p.x() > 0 ? 1.0 : (p.x() < 0 ? -1.0 : 0.0);
        const double sy = p.y() > 0 ? 1.0 : (p.y() < 0 ? -1.0 : 0.0);
        return amplitude * sx * sy * swirl(p);
    };
}

/// Smooth Stokes solution on (-1,1)^2:
///   u = g(t) curl[(1-x^2)^2 (1-y^2)^2],  p = g(t) sin(pi x) sin(pi y),  g(t) = t^2 e^{-t}.
/// u vanishes on the boundary, p has zero mean and u(0) = 0.
class ManufacturedStokes {
public:
    explicit ManufacturedStokes(double nu) : nu_(nu) {}

    static double g(double t) { return t * t * std::exp(-t); }
    static double dg(double t) { return (2 * t - t * t) * std::exp(-t); }

    static Eigen::Vector2d velocity_shape(const fem::Point& p) {
        const double x = p.x(), y = p.y();
        return {X(x) * X1(y), -X1(x) * X(y)};
    }

    static double pressure_shape(const fem::Point& p) {
        return std::sin(pi * p.x()) * std::sin(pi * p.y());
    }

    Eigen::Vector2d velocity(const fem::Point& p, double t) const { return g(t) * velocity_shape(p); }
    double pressure(const fem::Point& p, double t) const { return g(t) * pressure_shape(p); }

    /// f = du/dt - nu lap u + grad p.
    Eigen::Vector2d forcing(const fem::Point& p, double t) const {
        const double x = p.x(), y = p.y();
        const Eigen::Vector2d lap(X2(x) * X1(y) + X(x) * X3(y), -(X3(x) * X(y) + X1(x) * X2(y)));
        const Eigen::Vector2d grad_p(pi * std::cos(pi * x) * std::sin(pi * y), pi * std::sin(pi * x) * std::cos(pi * y));
        return dg(t) * velocity_shape(p) - nu_ * g(t) * lap + g(t) * grad_p;
    }

    SpaceTimeField forcing_field() const {
        return [self = *this](const fem::Point& p, double t) { return self.forcing(p, t); };
    }

private:
    static constexpr double pi = std::numbers::pi;
    static double X(double x) { return (1 - x * x) * (1 - x * x); }
    static double X1(double x) { return -4 * x * (1 - x * x); }
    static double X2(double x) { return 12 * x * x - 4; }
    static double X3(double x) { return 24 * x; }

    double nu_;
};

}  // namespace problems
}  // namespace cnpressure
