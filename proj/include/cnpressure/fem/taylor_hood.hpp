#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <algorithm>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "cnpressure/exceptions.hpp"
#include "cnpressure/fem/mesh.hpp"

namespace cnpressure::fem {

/// Quadratic Lagrange basis on the reference triangle. Local nodes 0..2 are the
/// vertices, 3..5 the midpoints of edges (0,1), (1,2), (2,0).
struct P2Basis {
    static constexpr int size = 6;

    static std::array<double, 6> values(double xi, double eta) {
        const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
        return {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0};
    }

    /// Reference gradients, one (d/dxi, d/deta) pair per basis function.
    static std::array<Eigen::Vector2d, 6> gradients(double xi, double eta) {
        const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
        const Eigen::Vector2d g0(-1, -1), g1(1, 0), g2(0, 1);
        return {(4 * l0 - 1) * g0, (4 * l1 - 1) * g1, (4 * l2 - 1) * g2,
                4 * (l0 * g1 + l1 * g0), 4 * (l1 * g2 + l2 * g1), 4 * (l2 * g0 + l0 * g2)};
    }
};

struct P1Basis {
    static constexpr int size = 3;

    static std::array<double, 3> values(double xi, double eta) { return {1.0 - xi - eta, xi, eta}; }

    static std::array<Eigen::Vector2d, 3> gradients() {
        return {Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
    }
};

/// Affine map from the reference triangle onto element t.
struct ElementMap {
    Point origin;
    Eigen::Matrix2d jacobian;
    Eigen::Matrix2d inverse_transpose;
    double det = 0.0;

    Point to_physical(double xi, double eta) const { return origin + jacobian * Eigen::Vector2d(xi, eta); }
    Eigen::Vector2d physical_gradient(const Eigen::Vector2d& ref) const { return inverse_transpose * ref; }
};

inline ElementMap element_map(const FemMesh2D& mesh, std::size_t t) {
    const auto& tri = mesh.triangles().at(t);
    const auto& v = mesh.vertices();
    ElementMap m;
    m.origin = v[tri[0]];
    m.jacobian.col(0) = v[tri[1]] - v[tri[0]];
    m.jacobian.col(1) = v[tri[2]] - v[tri[0]];
    m.det = m.jacobian.determinant();
    const double scale = m.jacobian.cwiseAbs().maxCoeff();
    if (!(m.det > 1e-14 * scale * scale)) throw AssemblyError(t, m.det);
    m.inverse_transpose = m.jacobian.inverse().transpose();
    return m;
}

/// P2 velocity / P1 pressure pair on a triangulation. Velocity dofs are blocked:
/// x-components of all P2 nodes, then y-components. Pressure dofs are the vertices.
class TaylorHoodSpace {
public:
    explicit TaylorHoodSpace(FemMesh2D mesh) : mesh_(std::move(mesh)) {
        nodes_ = mesh_.vertices();
        std::map<std::pair<int, int>, int> edges;
        local_.reserve(mesh_.triangle_count());
        for (std::size_t t = 0; t < mesh_.triangle_count(); ++t) {
            const auto& tri = mesh_.triangles()[t];
            (void)element_map(mesh_, t);
            std::array<int, 6> loc{tri[0], tri[1], tri[2], 0, 0, 0};
            const std::array<std::pair<int, int>, 3> local_edges{{{0, 1}, {1, 2}, {2, 0}}};
            for (int e = 0; e < 3; ++e) {
                int a = tri[local_edges[e].first], b = tri[local_edges[e].second];
                const auto key = std::minmax(a, b);
                auto [it, inserted] = edges.try_emplace({key.first, key.second}, static_cast<int>(nodes_.size()));
                if (inserted) nodes_.push_back(0.5 * (mesh_.vertices()[a] + mesh_.vertices()[b]));
                loc[3 + e] = it->second;
            }
            local_.push_back(loc);
        }
        boundary_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) boundary_[i] = mesh_.box().on_boundary(nodes_[i]);
    }

    const FemMesh2D& mesh() const noexcept { return mesh_; }

    /// Number of scalar P2 nodes.
    std::size_t scalar_nodes() const noexcept { return nodes_.size(); }
    std::size_t velocity_dofs() const noexcept { return 2 * nodes_.size(); }
    std::size_t pressure_dofs() const noexcept { return mesh_.vertex_count(); }

    const std::vector<Point>& node_coordinates() const noexcept { return nodes_; }
    const std::array<int, 6>& element_nodes(std::size_t t) const { return local_.at(t); }

    /// Global velocity dof of component c (0 or 1) at scalar node i.
    int velocity_dof(int component, int node) const { return component * static_cast<int>(nodes_.size()) + node; }

    bool is_boundary_node(std::size_t i) const { return boundary_.at(i); }
    bool is_boundary_velocity_dof(std::size_t dof) const { return boundary_.at(dof % nodes_.size()); }

    /// Interpolates a vector field at the P2 nodes.
    template <class F>
    Eigen::VectorXd interpolate_velocity(F&& f) const {
        Eigen::VectorXd u(static_cast<Eigen::Index>(velocity_dofs()));
        const auto n = static_cast<Eigen::Index>(nodes_.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Vector2d v = f(nodes_[static_cast<std::size_t>(i)]);
            u[i] = v.x();
            u[n + i] = v.y();
        }
        return u;
    }

    /// Interpolates a scalar field at the vertices.
    template <class F>
    Eigen::VectorXd interpolate_pressure(F&& f) const {
        Eigen::VectorXd p(static_cast<Eigen::Index>(pressure_dofs()));
        for (std::size_t i = 0; i < pressure_dofs(); ++i) p[static_cast<Eigen::Index>(i)] = f(mesh_.vertices()[i]);
        return p;
    }

    /// Velocity value at reference point (xi, eta) of element t.
    Eigen::Vector2d velocity_at(const Eigen::VectorXd& u, std::size_t t, double xi, double eta) const {
        const auto phi = P2Basis::values(xi, eta);
        const auto& loc = local_.at(t);
        const auto n = static_cast<Eigen::Index>(nodes_.size());
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        for (int a = 0; a < 6; ++a) v += phi[a] * Eigen::Vector2d(u[loc[a]], u[n + loc[a]]);
        return v;
    }

    double pressure_at(const Eigen::VectorXd& p, std::size_t t, double xi, double eta) const {
        const auto psi = P1Basis::values(xi, eta);
        const auto& tri = mesh_.triangles().at(t);
        return psi[0] * p[tri[0]] + psi[1] * p[tri[1]] + psi[2] * p[tri[2]];
    }

private:
    FemMesh2D mesh_;
    std::vector<Point> nodes_;
    std::vector<std::array<int, 6>> local_;
    std::vector<bool> boundary_;
};

}  // namespace cnpressure::fem
