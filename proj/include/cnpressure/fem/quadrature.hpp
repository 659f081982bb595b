#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cnpressure/exceptions.hpp"

namespace cnpressure::fem {

/// Quadrature rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct TriangleRule {
    std::vector<Eigen::Vector2d> points;
    std::vector<double> weights;
    int degree = 0;
};

namespace detail {

// Symmetric orbits in barycentric coordinates; weights given relative to the unit-area
// normalization and halved on insertion.
inline void add_centroid(TriangleRule& r, double w) {
    r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    r.weights.push_back(0.5 * w);
}

inline void add_orbit3(TriangleRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    for (auto [x, y] : {std::pair{a, a}, std::pair{b, a}, std::pair{a, b}}) {
        r.points.emplace_back(x, y);
        r.weights.push_back(0.5 * w);
    }
}

inline void add_orbit6(TriangleRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}, std::pair{a, c}, std::pair{c, a}, std::pair{b, c},
                        std::pair{c, b}}) {
        r.points.emplace_back(x, y);
        r.weights.push_back(0.5 * w);
    }
}

}  // namespace detail

/// 6-point rule, exact for degree 4.
inline TriangleRule rule_degree4() {
    TriangleRule r;
    r.degree = 4;
    detail::add_orbit3(r, 0.445948490915964886318, 0.223381589678011465945);
    detail::add_orbit3(r, 0.091576213509770743460, 0.109951743655321867637);
    return r;
}

/// 7-point rule, exact for degree 5.
inline TriangleRule rule_degree5() {
    TriangleRule r;
    r.degree = 5;
    const double s15 = std::sqrt(15.0);
    detail::add_centroid(r, 0.225);
    detail::add_orbit3(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
    detail::add_orbit3(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
    return r;
}

/// 12-point rule, exact for degree 6.
inline TriangleRule rule_degree6() {
    TriangleRule r;
    r.degree = 6;
    detail::add_orbit3(r, 0.249286745170910421136, 0.116786275726379366030);
    detail::add_orbit3(r, 0.063089014491502228340, 0.050844906370206816921);
    detail::add_orbit6(r, 0.053145049844816947353, 0.310352451033784405416, 0.082851075618373575194);
    return r;
}

inline TriangleRule rule_for_degree(int degree) {
    if (degree <= 4) return rule_degree4();
    if (degree == 5) return rule_degree5();
    if (degree == 6) return rule_degree6();
    throw InvalidArgument("no triangle rule of degree " + std::to_string(degree));
}

}  // namespace cnpressure::fem
