#pragma once

// Independent assembly oracle: P2 and P1 bases built from monomials in physical
// coordinates and integrated with the degree-6 rule on every element.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "cnpressure/fem/assembly.hpp"

namespace cnpressure::oracle {

using namespace cnpressure::fem;

using Mono = Eigen::Matrix<double, 6, 1>;

inline Mono monomials(const Point& p) {
    const double x = p.x(), y = p.y();
    Mono m;
    m << 1, x, y, x * x, x * y, y * y;
    return m;
}

inline Eigen::Matrix<double, 6, 2> monomial_gradients(const Point& p) {
    const double x = p.x(), y = p.y();
    Eigen::Matrix<double, 6, 2> g;
    g << 0, 0, 1, 0, 0, 1, 2 * x, 0, y, x, 0, 2 * y;
    return g;
}

struct OracleElement {
    std::array<Point, 6> nodes;
    Eigen::Matrix<double, 6, 6> p2;  // column a: monomial coefficients of basis a
    Eigen::Matrix3d p1;              // column i: coefficients of 1, x, y
    double area = 0.0;

    explicit OracleElement(const std::array<Point, 3>& v) {
        nodes = {v[0], v[1], v[2], 0.5 * (v[0] + v[1]), 0.5 * (v[1] + v[2]), 0.5 * (v[2] + v[0])};
        Eigen::Matrix<double, 6, 6> vand;
        for (int i = 0; i < 6; ++i) vand.row(i) = monomials(nodes[i]).transpose();
        p2 = vand.inverse();
        Eigen::Matrix3d v1;
        for (int i = 0; i < 3; ++i) v1.row(i) << 1, v[i].x(), v[i].y();
        p1 = v1.inverse();
        area = 0.5 * std::abs((v[1] - v[0]).x() * (v[2] - v[0]).y() - (v[1] - v[0]).y() * (v[2] - v[0]).x());
    }

    double phi(int a, const Point& x) const { return monomials(x).dot(p2.col(a)); }
    Eigen::Vector2d grad(int a, const Point& x) const { return monomial_gradients(x).transpose() * p2.col(a); }
    double psi(int i, const Point& x) const { return Eigen::Vector3d(1, x.x(), x.y()).dot(p1.col(i)); }
};

struct OracleMatrices {
    Eigen::MatrixXd mass, stiff, div, pmass, conv, react;
    Eigen::VectorXd conv_vec, load;
};

inline int node_index(const TaylorHoodSpace& s, const Point& p) {
    const auto& nodes = s.node_coordinates();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if ((nodes[i] - p).norm() < 1e-12) return static_cast<int>(i);
    throw std::logic_error("oracle: node not found");
}

template <class F>
OracleMatrices oracle(const TaylorHoodSpace& s, const Eigen::VectorXd& w, const Eigen::VectorXd& u, F&& f) {
    const auto nu = static_cast<Eigen::Index>(s.velocity_dofs());
    const auto np = static_cast<Eigen::Index>(s.pressure_dofs());
    const auto nn = static_cast<int>(s.scalar_nodes());
    OracleMatrices o{Eigen::MatrixXd::Zero(nu, nu), Eigen::MatrixXd::Zero(nu, nu), Eigen::MatrixXd::Zero(np, nu),
                     Eigen::MatrixXd::Zero(np, np), Eigen::MatrixXd::Zero(nu, nu), Eigen::MatrixXd::Zero(nu, nu),
                     Eigen::VectorXd::Zero(nu), Eigen::VectorXd::Zero(nu)};
    const auto rule = rule_degree6();
    for (std::size_t t = 0; t < s.mesh().triangle_count(); ++t) {
        const auto& tri = s.mesh().triangles()[t];
        std::array<Point, 3> v{s.mesh().vertices()[tri[0]], s.mesh().vertices()[tri[1]], s.mesh().vertices()[tri[2]]};
        OracleElement e(v);
        std::array<int, 6> g{};
        for (int a = 0; a < 6; ++a) g[a] = node_index(s, e.nodes[a]);
        auto field = [&](const Eigen::VectorXd& vec, const Point& x) {
            Eigen::Vector2d val = Eigen::Vector2d::Zero();
            Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
            for (int a = 0; a < 6; ++a) {
                const Eigen::Vector2d c(vec[g[a]], vec[nn + g[a]]);
                val += e.phi(a, x) * c;
                grad += c * e.grad(a, x).transpose();
            }
            return std::pair{val, grad};
        };
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double xi = rule.points[q].x(), eta = rule.points[q].y();
            const Point x = (1 - xi - eta) * v[0] + xi * v[1] + eta * v[2];
            const double wq = 2.0 * e.area * rule.weights[q];
            const auto [wv, wg] = field(w, x);
            const auto [uv, ug] = field(u, x);
            const Eigen::Vector2d fx = f(x);
            for (int a = 0; a < 6; ++a) {
                const double pa = e.phi(a, x);
                const Eigen::Vector2d ga = e.grad(a, x);
                for (int c = 0; c < 2; ++c) {
                    o.conv_vec[c * nn + g[a]] += wq * pa * (wg * wv)[c];
                    o.load[c * nn + g[a]] += wq * pa * fx[c];
                }
                for (int b = 0; b < 6; ++b) {
                    const double pb = e.phi(b, x);
                    const Eigen::Vector2d gb = e.grad(b, x);
                    for (int c = 0; c < 2; ++c) {
                        const int r = c * nn + g[a];
                        o.mass(r, c * nn + g[b]) += wq * pa * pb;
                        o.stiff(r, c * nn + g[b]) += wq * ga.dot(gb);
                        o.conv(r, c * nn + g[b]) += wq * pa * wv.dot(gb);
                        for (int d = 0; d < 2; ++d) o.react(r, d * nn + g[b]) += wq * pa * pb * ug(c, d);
                    }
                }
                for (int i = 0; i < 3; ++i)
                    for (int c = 0; c < 2; ++c) o.div(tri[i], c * nn + g[a]) += wq * e.psi(i, x) * ga[c];
            }
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) o.pmass(tri[i], tri[j]) += wq * e.psi(i, x) * e.psi(j, x);
        }
    }
    return o;
}

inline double max_diff(const SparseMatrix& a, const Eigen::MatrixXd& b) {
    return (Eigen::MatrixXd(a) - b).cwiseAbs().maxCoeff();
}

inline FemMesh2D two_elements() {
    return FemMesh2D(Rectangle{0, 1, 0, 1}, {Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)}, {{0, 1, 2}, {0, 2, 3}});
}

inline Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

/// Largest entrywise deviation between the assembler and the oracle, per operator, for
/// random velocity fields and a polynomial load.
inline std::map<std::string, double> deviations(const TaylorHoodSpace& s, unsigned seed = 11) {
    const Assembler as(s);
    const auto nu = static_cast<Eigen::Index>(s.velocity_dofs());
    const Eigen::VectorXd w = random_vector(nu, seed);
    const Eigen::VectorXd u = random_vector(nu, seed + 1);
    auto f = [](const Point& p) { return Eigen::Vector2d(p.x() * p.x() * p.y(), 1.0 - p.x() * p.y() * p.y()); };
    const auto o = oracle(s, w, u, f);
    return {{"velocity_mass", max_diff(as.velocity_mass(), o.mass)},
            {"stiffness", max_diff(as.stiffness(), o.stiff)},
            {"divergence", max_diff(as.divergence(), o.div)},
            {"pressure_mass", max_diff(as.pressure_mass(), o.pmass)},
            {"convection", max_diff(as.convection(w), o.conv)},
            {"convection_reaction", max_diff(as.convection_reaction(u), o.react)},
            {"convection_vector", (as.convection_vector(w) - o.conv_vec).lpNorm<Eigen::Infinity>()},
            {"load", (as.load(f) - o.load).lpNorm<Eigen::Infinity>()}};
}

}  // namespace cnpressure::oracle
