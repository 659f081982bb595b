#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cnpressure/exceptions.hpp"
#include "cnpressure/fem/sparse.hpp"
#include "cnpressure/fem/taylor_hood.hpp"

namespace cnpressure::fem {

/// Velocity with homogeneous boundary values and a zero-mean pressure.
struct MixedState {
    Eigen::VectorXd velocity;
    Eigen::VectorXd pressure;
};

/// Direct solver for
///   K u - s B^T p         = f   (interior velocity rows)
///   B u          + m l    = g
///         m^T p           = 0
/// with u = 0 on the boundary. -B^T p is the weak form of grad p; the multiplier l
/// enforces the zero-mean pressure.
/// The symbolic factorization is reused while K keeps its sparsity pattern.
class SaddlePointSolver {
public:
    using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
    using Backend = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;

    SaddlePointSolver(const TaylorHoodSpace& space, SparseMatrix divergence, Eigen::VectorXd pressure_integrals,
                      double residual_tolerance = 1e-10)
        : divergence_(std::move(divergence)), integrals_(std::move(pressure_integrals)), tol_(residual_tolerance) {
        const std::size_t nu = space.velocity_dofs();
        reduced_.assign(nu, -1);
        for (std::size_t d = 0; d < nu; ++d) {
            if (!space.is_boundary_velocity_dof(d)) {
                reduced_[d] = static_cast<int>(free_.size());
                free_.push_back(static_cast<int>(d));
            }
        }
        np_ = static_cast<int>(space.pressure_dofs());
        if (divergence_.rows() != np_ || divergence_.cols() != static_cast<Eigen::Index>(nu) ||
            integrals_.size() != np_)
            throw InvalidArgument("divergence matrix or pressure integrals do not match the space");
    }

    SaddlePointSolver(const SaddlePointSolver&) = delete;
    SaddlePointSolver& operator=(const SaddlePointSolver&) = delete;

    Eigen::Index system_size() const { return static_cast<Eigen::Index>(free_.size()) + np_ + 1; }
    const std::vector<int>& free_dofs() const noexcept { return free_; }
    int numeric_factorizations() const noexcept { return numeric_; }
    int symbolic_factorizations() const noexcept { return symbolic_; }

    /// Assembles and factors the bordered matrix for velocity block K and gradient scale s.
    void factorize(const SparseMatrix& k, double gradient_scale) {
        if (k.rows() != static_cast<Eigen::Index>(reduced_.size()) || k.cols() != k.rows())
            throw InvalidArgument("velocity block has wrong dimensions");
        if (!backend_ || !same_pattern(k, k_pattern_) || gradient_scale != scale_) {
            build(k, gradient_scale);
            backend_ = std::make_unique<Backend>();
            backend_->analyzePattern(system_);
            ++symbolic_;
        } else {
            for (std::size_t e = 0; e < scatter_.size(); ++e)
                if (scatter_[e] >= 0) system_.valuePtr()[scatter_[e]] = k.valuePtr()[e];
        }
        backend_->factorize(system_);
        ++numeric_;
        system_norm_ = 0.0;
        for (Eigen::Index c = 0; c < system_.outerSize(); ++c)
            for (ColMatrix::InnerIterator it(system_, c); it; ++it)
                system_norm_ = std::max(system_norm_, std::abs(it.value()));
        if (backend_->info() != Eigen::Success) throw SolverError("saddle-point factorization failed");
    }

    /// Solves with velocity load f (full velocity length) and continuity data g.
    MixedState solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
        if (!backend_) throw SolverError("solve called before factorize");
        const auto nf = static_cast<Eigen::Index>(free_.size());
        Eigen::VectorXd b = Eigen::VectorXd::Zero(system_size());
        for (Eigen::Index i = 0; i < nf; ++i) b[i] = f[free_[static_cast<std::size_t>(i)]];
        b.segment(nf, np_) = g;
        Eigen::VectorXd x = backend_->solve(b);
        Eigen::VectorXd r = b - system_ * x;
        auto backward_error = [&] {
            const double scale = system_norm_ * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
            return scale > 0 ? r.lpNorm<Eigen::Infinity>() / scale : 0.0;
        };
        if (backward_error() > 1e-15) {
            x += backend_->solve(r);
            r = b - system_ * x;
        }
        last_residual_ = backward_error();
        if (!std::isfinite(last_residual_) || last_residual_ > tol_) {
            std::ostringstream msg;
            msg << "saddle-point backward error " << std::scientific << last_residual_ << " above tolerance";
            throw SolverError(msg.str());
        }
        MixedState out;
        out.velocity = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reduced_.size()));
        for (Eigen::Index i = 0; i < nf; ++i) out.velocity[free_[static_cast<std::size_t>(i)]] = x[i];
        out.pressure = x.segment(nf, np_);
        return out;
    }

    /// Normwise backward error |r| / (|A| |x| + |b|) of the most recent solve.
    double last_residual() const noexcept { return last_residual_; }

private:
    void build(const SparseMatrix& k, double s) {
        const auto nf = static_cast<int>(free_.size());
        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(k.nonZeros() + 2 * divergence_.nonZeros() + 2 * np_));
        for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
            const int rr = reduced_[static_cast<std::size_t>(r)];
            if (rr < 0) continue;
            for (SparseMatrix::InnerIterator it(k, r); it; ++it) {
                const int cc = reduced_[static_cast<std::size_t>(it.col())];
                if (cc >= 0) trip.emplace_back(rr, cc, it.value());
            }
        }
        for (Eigen::Index q = 0; q < divergence_.outerSize(); ++q) {
            for (SparseMatrix::InnerIterator it(divergence_, q); it; ++it) {
                const int cc = reduced_[static_cast<std::size_t>(it.col())];
                if (cc < 0) continue;
                trip.emplace_back(nf + static_cast<int>(q), cc, it.value());
                trip.emplace_back(cc, nf + static_cast<int>(q), -s * it.value());
            }
        }
        const int last = nf + np_;
        for (int q = 0; q < np_; ++q) {
            trip.emplace_back(nf + q, last, integrals_[q]);
            trip.emplace_back(last, nf + q, integrals_[q]);
        }
        system_.resize(system_size(), system_size());
        system_.setFromTriplets(trip.begin(), trip.end());
        system_.makeCompressed();

        k_pattern_ = k;
        scale_ = s;
        scatter_.assign(static_cast<std::size_t>(k.nonZeros()), -1);
        for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
            const int rr = reduced_[static_cast<std::size_t>(r)];
            if (rr < 0) continue;
            for (Eigen::Index e = k.outerIndexPtr()[r]; e < k.outerIndexPtr()[r + 1]; ++e) {
                const int cc = reduced_[static_cast<std::size_t>(k.innerIndexPtr()[e])];
                if (cc < 0) continue;
                const int* begin = system_.innerIndexPtr() + system_.outerIndexPtr()[cc];
                const int* end = system_.innerIndexPtr() + system_.outerIndexPtr()[cc + 1];
                const int* pos = std::lower_bound(begin, end, rr);
                scatter_[static_cast<std::size_t>(e)] = static_cast<int>(pos - system_.innerIndexPtr());
            }
        }
    }

    SparseMatrix divergence_;
    Eigen::VectorXd integrals_;
    double tol_;
    std::vector<int> reduced_;
    std::vector<int> free_;
    int np_ = 0;

    ColMatrix system_;
    SparseMatrix k_pattern_;
    double scale_ = 0.0;
    std::vector<int> scatter_;
    std::unique_ptr<Backend> backend_;
    int numeric_ = 0, symbolic_ = 0;
    mutable double last_residual_ = 0.0;
    double system_norm_ = 0.0;
};

}  // namespace cnpressure::fem
