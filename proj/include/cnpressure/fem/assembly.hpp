#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "cnpressure/fem/quadrature.hpp"
#include "cnpressure/fem/sparse.hpp"
#include "cnpressure/fem/taylor_hood.hpp"

namespace cnpressure::fem {

/// Reference-element tabulation of the P2 and P1 bases for one quadrature rule.
struct Tabulation {
    TriangleRule rule;
    std::vector<std::array<double, 6>> p2;
    std::vector<std::array<Eigen::Vector2d, 6>> p2_grad;
    std::vector<std::array<double, 3>> p1;

    explicit Tabulation(TriangleRule r) : rule(std::move(r)) {
        for (const auto& x : rule.points) {
            p2.push_back(P2Basis::values(x.x(), x.y()));
            p2_grad.push_back(P2Basis::gradients(x.x(), x.y()));
            p1.push_back(P1Basis::values(x.x(), x.y()));
        }
    }
};

/// Finite element matrices and vectors on a Taylor-Hood space. Bilinear forms use
/// the degree-4 rule; the trilinear convection terms and loads use the degree-5 rule,
/// which is exact for the P2 * grad P2 * P2 integrand.
class Assembler {
public:
    explicit Assembler(const TaylorHoodSpace& space)
        : space_(&space), bilinear_(rule_degree4()), trilinear_(rule_degree5()) {
        const std::size_t nt = space.mesh().triangle_count();
        maps_.reserve(nt);
        for (std::size_t t = 0; t < nt; ++t) maps_.push_back(element_map(space.mesh(), t));
        build_velocity_pattern();
    }

    const TaylorHoodSpace& space() const noexcept { return *space_; }

    SparseMatrix velocity_mass() const {
        return velocity_block([&](std::size_t, const ElementMap& m, Local& out) {
            for (std::size_t q = 0; q < bilinear_.rule.points.size(); ++q) {
                const double w = bilinear_.rule.weights[q] * m.det;
                const auto& phi = bilinear_.p2[q];
                for (int a = 0; a < 6; ++a)
                    for (int b = 0; b < 6; ++b) {
                        const double v = w * phi[a] * phi[b];
                        out(a, b) += v;
                        out(6 + a, 6 + b) += v;
                    }
            }
        });
    }

    /// Vector Laplacian form (grad u, grad v).
    SparseMatrix stiffness() const {
        return velocity_block([&](std::size_t, const ElementMap& m, Local& out) {
            for (std::size_t q = 0; q < bilinear_.rule.points.size(); ++q) {
                const double w = bilinear_.rule.weights[q] * m.det;
                const auto g = physical(m, bilinear_.p2_grad[q]);
                for (int a = 0; a < 6; ++a)
                    for (int b = 0; b < 6; ++b) {
                        const double v = w * g[a].dot(g[b]);
                        out(a, b) += v;
                        out(6 + a, 6 + b) += v;
                    }
            }
        });
    }

    /// (B u)_i = integral of psi_i div u; rows are pressure dofs.
    SparseMatrix divergence() const {
        std::vector<Triplet> trip;
        trip.reserve(maps_.size() * 36);
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto& m = maps_[t];
            Eigen::Matrix<double, 3, 12> local = Eigen::Matrix<double, 3, 12>::Zero();
            for (std::size_t q = 0; q < bilinear_.rule.points.size(); ++q) {
                const double w = bilinear_.rule.weights[q] * m.det;
                const auto g = physical(m, bilinear_.p2_grad[q]);
                for (int i = 0; i < 3; ++i)
                    for (int a = 0; a < 6; ++a) {
                        local(i, a) += w * bilinear_.p1[q][i] * g[a].x();
                        local(i, 6 + a) += w * bilinear_.p1[q][i] * g[a].y();
                    }
            }
            const auto dofs = velocity_dofs(t);
            const auto& tri = space_->mesh().triangles()[t];
            for (int i = 0; i < 3; ++i)
                for (int a = 0; a < 12; ++a) trip.emplace_back(tri[i], dofs[a], local(i, a));
        }
        return from_triplets(np(), nu(), trip);
    }

    SparseMatrix pressure_mass() const {
        std::vector<Triplet> trip;
        trip.reserve(maps_.size() * 9);
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto& tri = space_->mesh().triangles()[t];
            Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
            for (std::size_t q = 0; q < bilinear_.rule.points.size(); ++q) {
                const double w = bilinear_.rule.weights[q] * maps_[t].det;
                const auto& psi = bilinear_.p1[q];
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) local(i, j) += w * psi[i] * psi[j];
            }
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local(i, j));
        }
        return from_triplets(np(), np(), trip);
    }

    /// Integrals of the pressure basis functions; m . p is the integral of p.
    Eigen::VectorXd pressure_integrals() const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(np());
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto& tri = space_->mesh().triangles()[t];
            for (int i = 0; i < 3; ++i) out[tri[i]] += maps_[t].det / 6.0;
        }
        return out;
    }

    /// (C(w) u)_i = integral of (w . grad u) . phi_i.
    SparseMatrix convection(const Eigen::VectorXd& w) const {
        return velocity_block([&](std::size_t t, const ElementMap& m, Local& out) {
            const auto wl = local_velocity(w, t);
            for (std::size_t q = 0; q < trilinear_.rule.points.size(); ++q) {
                const double wq = trilinear_.rule.weights[q] * m.det;
                const auto& phi = trilinear_.p2[q];
                const auto g = physical(m, trilinear_.p2_grad[q]);
                const Eigen::Vector2d wv = value(wl, phi);
                for (int a = 0; a < 6; ++a)
                    for (int b = 0; b < 6; ++b) {
                        const double v = wq * phi[a] * wv.dot(g[b]);
                        out(a, b) += v;
                        out(6 + a, 6 + b) += v;
                    }
            }
        });
    }

    /// (R(u) d)_i = integral of (d . grad u) . phi_i, the second half of the
    /// convection Jacobian: D[C(u) u] = C(u) + R(u).
    SparseMatrix convection_reaction(const Eigen::VectorXd& u) const {
        return velocity_block([&](std::size_t t, const ElementMap& m, Local& out) {
            const auto ul = local_velocity(u, t);
            for (std::size_t q = 0; q < trilinear_.rule.points.size(); ++q) {
                const double wq = trilinear_.rule.weights[q] * m.det;
                const auto& phi = trilinear_.p2[q];
                const Eigen::Matrix2d gu = gradient(ul, physical(m, trilinear_.p2_grad[q]));
                for (int a = 0; a < 6; ++a)
                    for (int b = 0; b < 6; ++b) {
                        const double pp = wq * phi[a] * phi[b];
                        for (int c = 0; c < 2; ++c)
                            for (int d = 0; d < 2; ++d) out(6 * c + a, 6 * d + b) += pp * gu(c, d);
                    }
            }
        });
    }

    /// Vector of integrals of (w . grad w) . phi_i.
    Eigen::VectorXd convection_vector(const Eigen::VectorXd& w) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(nu());
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto& m = maps_[t];
            const auto wl = local_velocity(w, t);
            const auto dofs = velocity_dofs(t);
            for (std::size_t q = 0; q < trilinear_.rule.points.size(); ++q) {
                const double wq = trilinear_.rule.weights[q] * m.det;
                const auto& phi = trilinear_.p2[q];
                const Eigen::Vector2d conv = gradient(wl, physical(m, trilinear_.p2_grad[q])) * value(wl, phi);
                for (int a = 0; a < 6; ++a) {
                    out[dofs[a]] += wq * phi[a] * conv.x();
                    out[dofs[6 + a]] += wq * phi[a] * conv.y();
                }
            }
        }
        return out;
    }

    /// Load vector of integrals of f . phi_i for f(Point) -> Vector2d.
    template <class F>
    Eigen::VectorXd load(F&& f) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(nu());
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto& m = maps_[t];
            const auto dofs = velocity_dofs(t);
            for (std::size_t q = 0; q < trilinear_.rule.points.size(); ++q) {
                const auto& x = trilinear_.rule.points[q];
                const Eigen::Vector2d fv = f(m.to_physical(x.x(), x.y()));
                const double wq = trilinear_.rule.weights[q] * m.det;
                for (int a = 0; a < 6; ++a) {
                    out[dofs[a]] += wq * trilinear_.p2[q][a] * fv.x();
                    out[dofs[6 + a]] += wq * trilinear_.p2[q][a] * fv.y();
                }
            }
        }
        return out;
    }

    const std::vector<ElementMap>& element_maps() const noexcept { return maps_; }

    std::array<int, 12> velocity_dofs(std::size_t t) const {
        const auto& loc = space_->element_nodes(t);
        std::array<int, 12> d{};
        for (int a = 0; a < 6; ++a) {
            d[a] = space_->velocity_dof(0, loc[a]);
            d[6 + a] = space_->velocity_dof(1, loc[a]);
        }
        return d;
    }

private:
    using Local = Eigen::Matrix<double, 12, 12>;
    using LocalVelocity = Eigen::Matrix<double, 2, 6>;

    Eigen::Index nu() const { return static_cast<Eigen::Index>(space_->velocity_dofs()); }
    Eigen::Index np() const { return static_cast<Eigen::Index>(space_->pressure_dofs()); }

    static std::array<Eigen::Vector2d, 6> physical(const ElementMap& m, const std::array<Eigen::Vector2d, 6>& ref) {
        std::array<Eigen::Vector2d, 6> g;
        for (int a = 0; a < 6; ++a) g[a] = m.physical_gradient(ref[a]);
        return g;
    }

    LocalVelocity local_velocity(const Eigen::VectorXd& u, std::size_t t) const {
        const auto dofs = velocity_dofs(t);
        LocalVelocity l;
        for (int a = 0; a < 6; ++a) {
            l(0, a) = u[dofs[a]];
            l(1, a) = u[dofs[6 + a]];
        }
        return l;
    }

    static Eigen::Vector2d value(const LocalVelocity& l, const std::array<double, 6>& phi) {
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        for (int a = 0; a < 6; ++a) v += phi[a] * l.col(a);
        return v;
    }

    /// Row c holds grad of component c.
    static Eigen::Matrix2d gradient(const LocalVelocity& l, const std::array<Eigen::Vector2d, 6>& g) {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        for (int a = 0; a < 6; ++a) m += l.col(a) * g[a].transpose();
        return m;
    }

    // Every velocity-velocity matrix uses the full 12x12 element blocks, so all of them
    // share one sparsity pattern; element entries are scattered by precomputed offsets.
    void build_velocity_pattern() {
        std::vector<Triplet> trip;
        trip.reserve(maps_.size() * 144);
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto dofs = velocity_dofs(t);
            for (int a = 0; a < 12; ++a)
                for (int b = 0; b < 12; ++b) trip.emplace_back(dofs[a], dofs[b], 0.0);
        }
        pattern_ = from_triplets(nu(), nu(), trip);
        offsets_.resize(maps_.size());
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            const auto dofs = velocity_dofs(t);
            for (int a = 0; a < 12; ++a) {
                const int* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[dofs[a]];
                const int* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[dofs[a] + 1];
                for (int b = 0; b < 12; ++b)
                    offsets_[t][12 * a + b] = static_cast<int>(std::lower_bound(begin, end, dofs[b]) - pattern_.innerIndexPtr());
            }
        }
    }

    template <class Kernel>
    SparseMatrix velocity_block(Kernel&& kernel) const {
        SparseMatrix out = pattern_;
        double* values = out.valuePtr();
        for (std::size_t t = 0; t < maps_.size(); ++t) {
            Local local = Local::Zero();
            kernel(t, maps_[t], local);
            const auto& off = offsets_[t];
            for (int a = 0; a < 12; ++a)
                for (int b = 0; b < 12; ++b) values[off[12 * a + b]] += local(a, b);
        }
        return out;
    }

    const TaylorHoodSpace* space_;
    Tabulation bilinear_;
    Tabulation trilinear_;
    std::vector<ElementMap> maps_;
    SparseMatrix pattern_;
    std::vector<std::array<int, 144>> offsets_;
};

}  // namespace cnpressure::fem
