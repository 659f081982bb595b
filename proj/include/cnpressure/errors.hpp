#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cnpressure/exceptions.hpp"
#include "cnpressure/fem/assembly.hpp"
#include "cnpressure/rate_fit.hpp"
#include "cnpressure/schemes.hpp"
#include "cnpressure/temporal_ops.hpp"

namespace cnpressure {

enum class NormId { PressureL2l2, PressureLinfl2, VelocityLinfV1, VelocityL2V2avg };

inline const char* to_string(NormId n) {
    switch (n) {
    case NormId::PressureL2l2: return "pressure_L2l2";
    case NormId::PressureLinfl2: return "pressure_Linfl2";
    case NormId::VelocityLinfV1: return "velocity_LinfV1";
    case NormId::VelocityL2V2avg: return "velocity_L2V2avg";
    }
    return "?";
}

inline NormId parse_norm(const std::string& s) {
    for (NormId n : {NormId::PressureL2l2, NormId::PressureLinfl2, NormId::VelocityLinfV1, NormId::VelocityL2V2avg})
        if (s == to_string(n)) return n;
    throw InvalidArgument("unknown norm '" + s + "'");
}

inline bool is_pressure_norm(NormId n) { return n == NormId::PressureL2l2 || n == NormId::PressureLinfl2; }

enum class SpatialNorm { MassWeighted, NodalEuclidean };

inline const char* to_string(SpatialNorm s) { return s == SpatialNorm::MassWeighted ? "mass" : "nodal"; }

inline SpatialNorm parse_spatial_norm(const std::string& s) {
    if (s == "mass") return SpatialNorm::MassWeighted;
    if (s == "nodal") return SpatialNorm::NodalEuclidean;
    throw InvalidArgument("unknown spatial norm '" + s + "' (expected mass or nodal)");
}

/// How the dG0 pressure is compared with the reference.
///   CoarseMidpoint:    p_k^n against the reference at t_{n-1/2}, one term of weight k_n per
///                      coarse interval.
///   ReferenceMidpoint: p_k(t_m) against the reference on its own interval m, one term of
///                      weight k_0 per reference interval.
enum class PressureSampling { CoarseMidpoint, ReferenceMidpoint };

inline const char* to_string(PressureSampling s) {
    return s == PressureSampling::CoarseMidpoint ? "coarse_midpoint" : "reference_midpoint";
}

inline PressureSampling parse_sampling(const std::string& s) {
    if (s == "coarse_midpoint") return PressureSampling::CoarseMidpoint;
    if (s == "reference_midpoint") return PressureSampling::ReferenceMidpoint;
    throw InvalidArgument("unknown pressure sampling '" + s + "'");
}

struct ErrorSpec {
    NormId norm = NormId::PressureL2l2;
    double alpha = 0.0;
    /// Window (t_{n0}, T]: the first n0 coarse intervals are skipped.
    std::size_t n0 = 0;
    SpatialNorm spatial = SpatialNorm::MassWeighted;
    PressureSampling sampling = PressureSampling::CoarseMidpoint;

    void validate() const {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("weight exponent must be nonnegative");
    }
};

/// Error norms between trajectories on one Taylor-Hood space.
class ErrorEvaluator {
public:
    explicit ErrorEvaluator(const fem::TaylorHoodSpace& space) : space_(&space) {
        const fem::Assembler as(space);
        pressure_mass_ = as.pressure_mass();
        integrals_ = as.pressure_integrals();
        area_ = integrals_.sum();
        stiffness_ = as.stiffness();
        for (std::size_t d = 0; d < space.velocity_dofs(); ++d)
            if (!space.is_boundary_velocity_dof(d)) free_.push_back(static_cast<int>(d));
        const auto m = as.velocity_mass();
        interior_mass_ = restrict(m);
        mass_factor_.compute(interior_mass_);
        if (mass_factor_.info() != Eigen::Success) throw SolverError("velocity mass matrix factorization failed");
    }

    double operator()(const Trajectory& traj, const Trajectory& ref, const ErrorSpec& spec) const {
        return is_pressure_norm(spec.norm) ? pressure_error(traj, ref, spec) : velocity_error(traj, ref, spec);
    }

    double pressure_error(const Trajectory& traj, const Trajectory& ref, const ErrorSpec& spec) const {
        spec.validate();
        check(traj, ref);
        if (!is_pressure_norm(spec.norm)) throw InvalidArgument("not a pressure norm");
        const auto p = spec.norm == NormId::PressureL2l2 ? TemporalNorm::L2 : TemporalNorm::Linf;
        const TimeMesh& mesh = traj.mesh();
        const SmoothingWeight weight(mesh, spec.alpha);
        auto norm = [&](const Eigen::VectorXd& e) { return pressure_norm(e, spec.spatial); };
        if (spec.sampling == PressureSampling::CoarseMidpoint) {
            std::vector<Eigen::VectorXd> diff;
            diff.reserve(mesh.intervals());
            for (std::size_t n = 1; n <= mesh.intervals(); ++n)
                diff.push_back(traj.pressure.on_interval(n) - reference_pressure(ref, mesh.midpoint(n)));
            return weighted_temporal_norm(GridFunctionDG0<Eigen::VectorXd>(mesh, std::move(diff)), weight, p, norm,
                                          Window::after(mesh, spec.n0));
        }
        const TimeMesh& fine = ref.mesh();
        double acc = 0.0;
        for (std::size_t m = 1; m <= fine.intervals(); ++m) {
            const double t = fine.midpoint(m);
            const std::size_t n = mesh.interval_containing(t);
            if (n <= spec.n0) continue;
            const double q = weight(n) * norm(traj.pressure(t) - ref.pressure.on_interval(m));
            if (p == TemporalNorm::L2)
                acc += fine.step(m) * q * q;
            else
                acc = std::max(acc, q);
        }
        return p == TemporalNorm::L2 ? std::sqrt(acc) : acc;
    }

    double velocity_error(const Trajectory& traj, const Trajectory& ref, const ErrorSpec& spec) const {
        spec.validate();
        check(traj, ref);
        const TimeMesh& mesh = traj.mesh();
        const SmoothingWeight weight(mesh, spec.alpha);
        if (spec.norm == NormId::VelocityLinfV1) {
            // Maximum over reference nodes inside the window of the stiffness seminorm.
            const TimeMesh& fine = ref.mesh();
            const double start = mesh.node(spec.n0);
            double acc = 0.0;
            for (std::size_t m = 0; m <= fine.intervals(); ++m) {
                const double t = fine.node(m);
                if (t <= start) continue;
                const Eigen::VectorXd e = traj.velocity(t) - ref.velocity.at_node(m);
                acc = std::max(acc, weight(mesh.interval_containing(t)) * stiffness_norm(e));
            }
            return acc;
        }
        if (spec.norm == NormId::VelocityL2V2avg) {
            std::vector<Eigen::VectorXd> diff;
            diff.reserve(mesh.intervals());
            for (std::size_t n = 1; n <= mesh.intervals(); ++n) {
                const Eigen::VectorXd avg = 0.5 * (traj.velocity.at_node(n - 1) + traj.velocity.at_node(n));
                diff.push_back(avg - interval_mean(ref.velocity, mesh.node(n - 1), mesh.node(n)));
            }
            return weighted_temporal_norm(GridFunctionDG0<Eigen::VectorXd>(mesh, std::move(diff)), weight,
                                          TemporalNorm::L2, [&](const Eigen::VectorXd& e) { return laplacian_norm(e); },
                                          Window::after(mesh, spec.n0));
        }
        throw InvalidArgument("not a velocity norm");
    }

    /// Spatial pressure norm after removing the mean.
    double pressure_norm(const Eigen::VectorXd& e, SpatialNorm flavor) const {
        const Eigen::VectorXd z = e.array() - integrals_.dot(e) / area_;
        return flavor == SpatialNorm::MassWeighted ? std::sqrt(std::max(0.0, z.dot(pressure_mass_ * z))) : z.norm();
    }

    /// (grad e, grad e)^{1/2}.
    double stiffness_norm(const Eigen::VectorXd& e) const { return std::sqrt(std::max(0.0, e.dot(stiffness_ * e))); }

    /// ||Delta_h e||_{L2}, with Delta_h e in the interior velocity space defined by
    /// (Delta_h e, v) = -(grad e, grad v). A discrete stand-in for the V^2 norm.
    double laplacian_norm(const Eigen::VectorXd& e) const {
        const Eigen::VectorXd ae = stiffness_ * e;
        Eigen::VectorXd b(static_cast<Eigen::Index>(free_.size()));
        for (std::size_t i = 0; i < free_.size(); ++i) b[static_cast<Eigen::Index>(i)] = ae[free_[i]];
        const Eigen::VectorXd w = mass_factor_.solve(b);
        return std::sqrt(std::max(0.0, w.dot(interior_mass_ * w)));
    }

    /// Reference pressure at time t: linear interpolation between reference interval
    /// midpoints, constant beyond the first and last midpoint.
    static Eigen::VectorXd reference_pressure(const Trajectory& ref, double t) {
        const TimeMesh& fine = ref.mesh();
        const std::size_t M = fine.intervals();
        if (t <= fine.midpoint(1)) return ref.pressure.on_interval(1);
        if (t >= fine.midpoint(M)) return ref.pressure.on_interval(M);
        std::size_t m = fine.interval_containing(t);
        if (t < fine.midpoint(m)) --m;
        const double a = fine.midpoint(m), b = fine.midpoint(m + 1);
        const double theta = (t - a) / (b - a);
        return (1.0 - theta) * ref.pressure.on_interval(m) + theta * ref.pressure.on_interval(m + 1);
    }

    /// Mean of a cG1 function over [a, b], integrated exactly.
    static Eigen::VectorXd interval_mean(const GridFunctionCG1<Eigen::VectorXd>& u, double a, double b) {
        const TimeMesh& mesh = u.mesh();
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(u.at_node(0).size());
        std::size_t m = mesh.interval_containing(std::max(a, mesh.node(0)));
        while (m <= mesh.intervals() && mesh.node(m - 1) < b) {
            const double lo = std::max(a, mesh.node(m - 1));
            const double hi = std::min(b, mesh.node(m));
            if (hi > lo) sum += 0.5 * (hi - lo) * (u(lo) + value_left(u, m, hi));
            ++m;
        }
        return sum / (b - a);
    }

private:
    // Affine piece of interval m evaluated at t (t may be the right endpoint).
    static Eigen::VectorXd value_left(const GridFunctionCG1<Eigen::VectorXd>& u, std::size_t m, double t) {
        const TimeMesh& mesh = u.mesh();
        const double theta = (t - mesh.node(m - 1)) / mesh.step(m);
        return (1.0 - theta) * u.at_node(m - 1) + theta * u.at_node(m);
    }

    fem::SparseMatrix restrict(const fem::SparseMatrix& a) const {
        std::vector<int> reduced(space_->velocity_dofs(), -1);
        for (std::size_t i = 0; i < free_.size(); ++i) reduced[static_cast<std::size_t>(free_[i])] = static_cast<int>(i);
        std::vector<fem::Triplet> trip;
        for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
            const int rr = reduced[static_cast<std::size_t>(r)];
            if (rr < 0) continue;
            for (fem::SparseMatrix::InnerIterator it(a, r); it; ++it) {
                const int cc = reduced[static_cast<std::size_t>(it.col())];
                if (cc >= 0) trip.emplace_back(rr, cc, it.value());
            }
        }
        const auto n = static_cast<Eigen::Index>(free_.size());
        return fem::from_triplets(n, n, trip);
    }

    void check(const Trajectory& traj, const Trajectory& ref) const {
        const auto nu = static_cast<Eigen::Index>(space_->velocity_dofs());
        const auto np = static_cast<Eigen::Index>(space_->pressure_dofs());
        if (traj.velocity.at_node(0).size() != nu || ref.velocity.at_node(0).size() != nu ||
            traj.pressure.on_interval(1).size() != np || ref.pressure.on_interval(1).size() != np)
            throw InvalidArgument("trajectories live on different spaces");
        if (std::abs(traj.mesh().final_time() - ref.mesh().final_time()) > 1e-12 * ref.mesh().final_time())
            throw InvalidArgument("trajectories have different final times");
    }

    const fem::TaylorHoodSpace* space_;
    fem::SparseMatrix pressure_mass_, stiffness_, interior_mass_;
    Eigen::VectorXd integrals_;
    double area_ = 1.0;
    std::vector<int> free_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> mass_factor_;
};

/// One (k, error) sample of a convergence study; error is NaN for a failed run.
struct ConvergenceRow {
    double k = 0.0;
    std::size_t n0 = 0;
    double alpha = 0.0;
    NormId norm = NormId::PressureL2l2;
    double error = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

/// Rows of one norm; ordered by descending k when written.
struct ConvergenceRecord {
    std::vector<ConvergenceRow> rows;

    void sort() {
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.k > b.k; });
    }

    /// Fit over successful rows; throws InvalidArgument when fewer than two remain or norms differ.
    RateFit fit() const {
        std::vector<double> k, e;
        for (const auto& r : rows) {
            if (r.norm != rows.front().norm) throw InvalidArgument("record mixes norms");
            if (r.status != "ok") continue;
            k.push_back(r.k);
            e.push_back(r.error);
        }
        return fit_rate(k, e);
    }
};

inline RateFit fit_rate(const ConvergenceRecord& record) { return record.fit(); }

/// Pairwise rate of row i against row i-1 of the same record (descending k); nullopt for the first row
/// or when either error is not a positive number.
inline std::optional<double> pairwise_rate(const ConvergenceRecord& r, std::size_t i) {
    if (i == 0) return std::nullopt;
    const auto& a = r.rows[i - 1];
    const auto& b = r.rows[i];
    if (!(a.error > 0.0) || !(b.error > 0.0) || a.k == b.k) return std::nullopt;
    return std::log(a.error / b.error) / std::log(a.k / b.k);
}

inline std::string csv_header() { return "k,n0,alpha,norm,error,rate_pairwise"; }

/// Writes the records (each sorted by descending k) with full double precision.
inline void write_csv(std::ostream& os, std::vector<ConvergenceRecord> records) {
    os << csv_header() << '\n';
    auto num = [](double v) {
        std::ostringstream s;
        s << std::setprecision(17) << v;
        return s.str();
    };
    for (auto& rec : records) {
        rec.sort();
        for (std::size_t i = 0; i < rec.rows.size(); ++i) {
            const auto& r = rec.rows[i];
            const auto rate = pairwise_rate(rec, i);
            os << num(r.k) << ',' << r.n0 << ',' << num(r.alpha) << ',' << to_string(r.norm) << ','
               << (r.status == "ok" ? num(r.error) : std::string("nan")) << ',' << (rate ? num(*rate) : std::string())
               << '\n';
        }
    }
}

}  // namespace cnpressure
