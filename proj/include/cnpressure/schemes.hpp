#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cnpressure/exceptions.hpp"
#include "cnpressure/fem/assembly.hpp"
#include "cnpressure/fem/saddle_point.hpp"
#include "cnpressure/problems.hpp"
#include "cnpressure/temporal_ops.hpp"
#include "cnpressure/time_mesh.hpp"

namespace cnpressure {

enum class SchemeTag { ImplicitEuler, CrankNicolson };

inline const char* to_string(SchemeTag s) { return s == SchemeTag::ImplicitEuler ? "IE" : "CN"; }

enum class FlowModel { Stokes, NavierStokes };

inline const char* to_string(FlowModel m) { return m == FlowModel::Stokes ? "stokes" : "nse"; }

struct NewtonConfig {
    double tolerance = 1e-10;  // absolute, on the assembled residual
    int max_iterations = 20;

    void validate() const {
        if (!(tolerance > 0.0)) throw InvalidArgument("Newton tolerance must be positive");
        if (max_iterations < 1) throw InvalidArgument("Newton needs at least one iteration");
    }
};

/// Initial velocity: zero, a nodal interpolant, precomputed coefficients, or the
/// solution of a stationary problem with the given forcing.
struct InitialData {
    enum class Kind { Zero, Field, Coefficients, StationarySolve };

    Kind kind = Kind::Zero;
    SpatialField field;
    Eigen::VectorXd coefficients;
    /// Data that violate the compatibility conditions; references then start with IE steps.
    bool incompatible = false;

    static InitialData zero() { return {}; }
    static InitialData interpolate(SpatialField f) { return {Kind::Field, std::move(f), {}, false}; }
    static InitialData stationary(SpatialField f0) { return {Kind::StationarySolve, std::move(f0), {}, true}; }
    static InitialData values(Eigen::VectorXd u, bool incompatible) {
        return {Kind::Coefficients, {}, std::move(u), incompatible};
    }
};

struct ProblemSpec {
    double viscosity = 0.01;
    double final_time = 2.0;
    FlowModel model = FlowModel::NavierStokes;
    std::string forcing_id = "zero";
    SpaceTimeField forcing;  // empty means f = 0
    InitialData initial;

    void validate() const {
        if (!(viscosity > 0.0)) throw InvalidArgument("viscosity must be positive");
        if (!(final_time > 0.0)) throw InvalidArgument("final time must be positive");
    }
};

struct StepReport {
    SchemeTag scheme = SchemeTag::CrankNicolson;
    int newton_iterations = 0;
    double residual = 0.0;
    /// r_m / r_{m-1}^2 over the last two Newton iterations; NaN when undefined.
    double tail_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
    GridFunctionCG1<Eigen::VectorXd> velocity;
    GridFunctionDG0<Eigen::VectorXd> pressure;
    std::vector<StepReport> steps;

    const TimeMesh& mesh() const noexcept { return velocity.mesh(); }
    SchemeTag scheme(std::size_t n) const { return steps.at(n - 1).scheme; }

    std::size_t euler_prefix() const {
        std::size_t n = 0;
        while (n < steps.size() && steps[n].scheme == SchemeTag::ImplicitEuler) ++n;
        return n;
    }
};

/// Spatial operators for one viscosity plus cached saddle-point factorizations.
/// Not thread-safe; use one instance per solve.
class FlowSolver {
public:
    FlowSolver(const fem::TaylorHoodSpace& space, double viscosity, NewtonConfig newton = {})
        : space_(&space), assembler_(space), nu_(viscosity), newton_(newton) {
        if (!(viscosity > 0.0)) throw InvalidArgument("viscosity must be positive");
        newton_.validate();
        mass_ = assembler_.velocity_mass();
        stiffness_ = assembler_.stiffness();
        divergence_ = assembler_.divergence();
        integrals_ = assembler_.pressure_integrals();
        interior_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(space.velocity_dofs()));
        for (std::size_t d = 0; d < space.velocity_dofs(); ++d)
            if (space.is_boundary_velocity_dof(d)) interior_[static_cast<Eigen::Index>(d)] = 0.0;
    }

    const fem::TaylorHoodSpace& space() const noexcept { return *space_; }
    const fem::Assembler& assembler() const noexcept { return assembler_; }
    const fem::SparseMatrix& mass() const noexcept { return mass_; }
    const fem::SparseMatrix& stiffness() const noexcept { return stiffness_; }
    const fem::SparseMatrix& divergence() const noexcept { return divergence_; }
    double viscosity() const noexcept { return nu_; }

    /// Load vector of the time integral of f over [a, b], 3-point Gauss in time.
    Eigen::VectorXd forcing_integral(const SpaceTimeField& f, double a, double b) const {
        const auto n = static_cast<Eigen::Index>(space_->velocity_dofs());
        if (!f) return Eigen::VectorXd::Zero(n);
        const auto rule = detail::gauss_legendre_unit(3);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double t = a + (b - a) * rule.points[q];
            sum += (b - a) * rule.weights[q] * assembler_.load([&](const fem::Point& x) { return f(x, t); });
        }
        return sum;
    }

    /// One Stokes step; load is the integrated forcing over the interval.
    fem::MixedState stokes_step(SchemeTag scheme, double k, const Eigen::VectorXd& u_prev, const Eigen::VectorXd& load) {
        check_step(k);
        const Form form = make_form(scheme, k, u_prev, load, 0.0);
        auto& solver = linear_solver(scheme, k, form);
        return solver.solve(form.rhs, Eigen::VectorXd::Zero(divergence_.rows()));
    }

    /// One Navier-Stokes step solved by Newton's method from the guess u_prev.
    fem::MixedState nse_step(SchemeTag scheme, double k, const Eigen::VectorXd& u_prev, const Eigen::VectorXd& load,
                             std::size_t step, StepReport& report) {
        check_step(k);
        const double conv = scheme == SchemeTag::CrankNicolson ? 0.25 * k : k;
        const Form form = make_form(scheme, k, u_prev, load, conv);
        return newton(form, u_prev, step, report, "reduce the time step");
    }

    /// -nu lap u + u.grad u + grad p = f0 by Newton's method from u = 0.
    fem::MixedState stationary_nse(const Eigen::VectorXd& load, StepReport& report) {
        Form form;
        form.base = nu_ * stiffness_;
        form.convection = 1.0;
        form.gradient_scale = 1.0;
        form.shift = Eigen::VectorXd::Zero(load.size());
        form.rhs = load;
        return newton(form, Eigen::VectorXd::Zero(load.size()), 0, report,
                      "try continuation in the viscosity from a larger value");
    }

    fem::MixedState stationary_stokes(const Eigen::VectorXd& load) {
        auto& solver = cached(-1.0, 1.0);
        if (solver.numeric_factorizations() == 0) solver.factorize(nu_ * stiffness_, 1.0);
        return solver.solve(load, Eigen::VectorXd::Zero(divergence_.rows()));
    }

    /// Masked momentum residual plus continuity residual of a stationary or time-step form.
    double interior_norm(const Eigen::VectorXd& v) const { return v.cwiseProduct(interior_).norm(); }

private:
    // R(u, p) = base u + convection N(u + shift) - s B^T p - rhs
    struct Form {
        fem::SparseMatrix base;
        double convection = 0.0;
        double gradient_scale = 1.0;
        Eigen::VectorXd shift;
        Eigen::VectorXd rhs;
    };

    static void check_step(double k) {
        if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("time step must be positive");
    }

    Form make_form(SchemeTag scheme, double k, const Eigen::VectorXd& u_prev, const Eigen::VectorXd& load,
                   double convection) {
        Form f;
        f.convection = convection;
        f.gradient_scale = k;
        if (scheme == SchemeTag::CrankNicolson) {
            f.base = block(scheme, k);
            f.rhs = mass_ * u_prev - (0.5 * k * nu_) * (stiffness_ * u_prev) + load;
            f.shift = u_prev;
        } else {
            f.base = block(scheme, k);
            f.rhs = mass_ * u_prev + load;
            f.shift = Eigen::VectorXd::Zero(u_prev.size());
        }
        return f;
    }

    const fem::SparseMatrix& block(SchemeTag scheme, double k) {
        const auto key = std::pair{static_cast<int>(scheme), k};
        auto it = blocks_.find(key);
        if (it == blocks_.end()) {
            const double a = scheme == SchemeTag::CrankNicolson ? 0.5 * k * nu_ : k * nu_;
            it = blocks_.emplace(key, fem::SparseMatrix(mass_ + a * stiffness_)).first;
        }
        return it->second;
    }

    fem::SaddlePointSolver& cached(double tag, double scale) {
        auto& slot = solvers_[{tag, scale}];
        if (!slot) slot = std::make_unique<fem::SaddlePointSolver>(*space_, divergence_, integrals_);
        return *slot;
    }

    fem::SaddlePointSolver& linear_solver(SchemeTag scheme, double k, const Form& form) {
        auto& solver = cached(static_cast<int>(scheme), k);
        if (solver.numeric_factorizations() == 0) solver.factorize(form.base, form.gradient_scale);
        return solver;
    }

    Eigen::VectorXd residual(const Form& f, const Eigen::VectorXd& u, const Eigen::VectorXd& p) const {
        Eigen::VectorXd r = f.base * u - f.gradient_scale * (divergence_.transpose() * p) - f.rhs;
        if (f.convection != 0.0) r += f.convection * assembler_.convection_vector(u + f.shift);
        return r;
    }

    double residual_norm(const Eigen::VectorXd& r, const Eigen::VectorXd& u) const {
        return std::hypot(interior_norm(r), (divergence_ * u).norm());
    }

    fem::MixedState newton(const Form& f, const Eigen::VectorXd& guess, std::size_t step, StepReport& report,
                           const char* hint) {
        // Nonlinear solves use a separate cache slot so linear factorizations stay valid.
        auto& solver = cached(2.0, f.gradient_scale);
        fem::MixedState x{guess, Eigen::VectorXd::Zero(divergence_.rows())};
        Eigen::VectorXd r = residual(f, x.velocity, x.pressure);
        double previous = residual_norm(r, x.velocity);
        report.tail_ratio = std::numeric_limits<double>::quiet_NaN();
        for (int it = 1; it <= newton_.max_iterations; ++it) {
            const Eigen::VectorXd w = x.velocity + f.shift;
            const fem::SparseMatrix jac =
                f.base + f.convection * (assembler_.convection(w) + assembler_.convection_reaction(w));
            solver.factorize(jac, f.gradient_scale);
            const auto delta = solver.solve(-r, -(divergence_ * x.velocity));
            x.velocity += delta.velocity;
            x.pressure += delta.pressure;
            r = residual(f, x.velocity, x.pressure);
            const double now = residual_norm(r, x.velocity);
            if (previous > 0.0) report.tail_ratio = now / (previous * previous);
            report.newton_iterations = it;
            report.residual = now;
            if (!std::isfinite(now)) break;
            if (now <= newton_.tolerance) return x;
            previous = now;
        }
        throw ConvergenceError(step, report.newton_iterations, report.residual, hint);
    }

    const fem::TaylorHoodSpace* space_;
    fem::Assembler assembler_;
    double nu_;
    NewtonConfig newton_;
    fem::SparseMatrix mass_, stiffness_, divergence_;
    Eigen::VectorXd integrals_, interior_;
    std::map<std::pair<int, double>, fem::SparseMatrix> blocks_;
    std::map<std::pair<double, double>, std::unique_ptr<fem::SaddlePointSolver>> solvers_;
};

/// -nu lap u + u.grad u + grad p = f0 with homogeneous Dirichlet data and zero-mean pressure.
inline fem::MixedState stationary_nse_solve(const fem::TaylorHoodSpace& space, double viscosity,
                                            const SpatialField& f0, NewtonConfig newton = {}) {
    FlowSolver solver(space, viscosity, newton);
    const Eigen::VectorXd load =
        f0 ? solver.assembler().load(f0) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.velocity_dofs()));
    StepReport report;
    return solver.stationary_nse(load, report);
}

inline Eigen::VectorXd initial_velocity(const fem::TaylorHoodSpace& space, const ProblemSpec& spec,
                                        NewtonConfig newton = {}) {
    const auto n = static_cast<Eigen::Index>(space.velocity_dofs());
    switch (spec.initial.kind) {
    case InitialData::Kind::Zero: return Eigen::VectorXd::Zero(n);
    case InitialData::Kind::Field: return space.interpolate_velocity(spec.initial.field);
    case InitialData::Kind::Coefficients:
        if (spec.initial.coefficients.size() != n) throw InvalidArgument("initial coefficients have wrong length");
        return spec.initial.coefficients;
    case InitialData::Kind::StationarySolve:
        if (spec.model == FlowModel::Stokes) {
            FlowSolver solver(space, spec.viscosity, newton);
            return solver.stationary_stokes(solver.assembler().load(spec.initial.field)).velocity;
        }
        return stationary_nse_solve(space, spec.viscosity, spec.initial.field, newton).velocity;
    }
    throw InvalidArgument("unknown initial data kind");
}

namespace detail {

inline Trajectory time_march(const fem::TaylorHoodSpace& space, const ProblemSpec& spec, const TimeMesh& mesh,
                             std::size_t n0, NewtonConfig newton, FlowModel model) {
    spec.validate();
    newton.validate();
    const std::size_t N = mesh.intervals();
    if (n0 >= N) throw InvalidArgument("Euler prefix must be shorter than the mesh");
    FlowSolver solver(space, spec.viscosity, newton);
    std::vector<Eigen::VectorXd> u;
    std::vector<Eigen::VectorXd> p;
    std::vector<StepReport> steps;
    u.reserve(N + 1);
    p.reserve(N);
    steps.reserve(N);
    u.push_back(initial_velocity(space, spec, newton));
    const bool check_energy = model == FlowModel::Stokes && !spec.forcing;
    for (std::size_t n = 1; n <= N; ++n) {
        StepReport report;
        report.scheme = n <= n0 ? SchemeTag::ImplicitEuler : SchemeTag::CrankNicolson;
        const double k = mesh.step(n);
        const Eigen::VectorXd load = solver.forcing_integral(spec.forcing, mesh.node(n - 1), mesh.node(n));
        fem::MixedState x;
        try {
            x = model == FlowModel::Stokes ? solver.stokes_step(report.scheme, k, u.back(), load)
                                           : solver.nse_step(report.scheme, k, u.back(), load, n, report);
        } catch (const ConvergenceError&) {
            throw;
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(n) + ": " + e.what());
        }
        if (check_energy) {
            const double before = std::sqrt(u.back().dot(solver.mass() * u.back()));
            const double after = std::sqrt(x.velocity.dot(solver.mass() * x.velocity));
            if (after > before * (1.0 + 1e-12) + 1e-300)
                throw SolverError("energy increased at step " + std::to_string(n));
        }
        u.push_back(std::move(x.velocity));
        p.push_back(std::move(x.pressure));
        steps.push_back(report);
    }
    return Trajectory{GridFunctionCG1<Eigen::VectorXd>(mesh, std::move(u)),
                      GridFunctionDG0<Eigen::VectorXd>(mesh, std::move(p)), std::move(steps)};
}

}  // namespace detail

/// Crank-Nicolson for Stokes after n0 implicit Euler steps. The convection term is
/// ignored whatever spec.model says.
inline Trajectory stokes_cn_solve(const fem::TaylorHoodSpace& space, const ProblemSpec& spec, const TimeMesh& mesh,
                                  std::size_t n0 = 0) {
    return detail::time_march(space, spec, mesh, n0, NewtonConfig{}, FlowModel::Stokes);
}

/// Crank-Nicolson for Navier-Stokes after n0 fully implicit Euler steps, Newton per step.
inline Trajectory nse_cn_solve(const fem::TaylorHoodSpace& space, const ProblemSpec& spec, const TimeMesh& mesh,
                               std::size_t n0 = 0, NewtonConfig newton = {}) {
    return detail::time_march(space, spec, mesh, n0, newton, FlowModel::NavierStokes);
}

inline Trajectory solve(const fem::TaylorHoodSpace& space, const ProblemSpec& spec, const TimeMesh& mesh,
                        std::size_t n0 = 0, NewtonConfig newton = {}) {
    return detail::time_march(space, spec, mesh, n0, newton, spec.model);
}

/// Fine-grid solution on a uniform mesh, with two IE steps first when the initial data
/// are incompatible. coarse_min_step > 0 enforces step <= coarse_min_step / 8.
inline Trajectory reference_solve(const fem::TaylorHoodSpace& space, const ProblemSpec& spec,
                                  const TimeMesh& fine_mesh, double coarse_min_step = 0.0, NewtonConfig newton = {}) {
    const double k0 = fine_mesh.max_step();
    if (k0 - fine_mesh.min_step() > 1e-9 * k0) throw InvalidArgument("reference mesh must be uniform");
    if (coarse_min_step > 0.0 && k0 > coarse_min_step / 8.0 * (1.0 + 1e-9))
        throw InvalidArgument("reference step must be at most 1/8 of the smallest coarse step");
    return solve(space, spec, fine_mesh, spec.initial.incompatible ? 2 : 0, newton);
}

/// Writes manifest.txt, velocity.txt (node index, time, coefficients) and pressure.txt
/// (interval index, midpoint, coefficients) into dir.
inline void export_trajectory(const std::filesystem::path& dir, const Trajectory& traj, const ProblemSpec& spec,
                              const fem::TaylorHoodSpace& space) {
    std::filesystem::create_directories(dir);
    const auto& mesh = traj.mesh();
    {
        std::ofstream os(dir / "manifest.txt");
        os << std::setprecision(17);
        os << "format = cnpressure-trajectory-1\n";
        os << "model = " << to_string(spec.model) << "\n";
        os << "viscosity = " << spec.viscosity << "\n";
        os << "forcing = " << spec.forcing_id << "\n";
        os << "final_time = " << mesh.final_time() << "\n";
        os << "intervals = " << mesh.intervals() << "\n";
        os << "spatial_nx = " << space.mesh().nx() << "\nspatial_ny = " << space.mesh().ny() << "\n";
        os << "velocity_dofs = " << space.velocity_dofs() << "\npressure_dofs = " << space.pressure_dofs() << "\n";
        os << "euler_prefix = " << traj.euler_prefix() << "\n";
        os << "schemes = ";
        for (std::size_t n = 1; n <= mesh.intervals(); ++n) os << to_string(traj.scheme(n)) << (n < mesh.intervals() ? "," : "\n");
        os << "nodes = ";
        for (std::size_t n = 0; n <= mesh.intervals(); ++n) os << mesh.node(n) << (n < mesh.intervals() ? "," : "\n");
    }
    auto dump = [](std::ofstream& os, const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << v[i];
        os << '\n';
    };
    std::ofstream vel(dir / "velocity.txt");
    vel << std::setprecision(17);
    for (std::size_t n = 0; n <= mesh.intervals(); ++n) {
        vel << n << ' ' << mesh.node(n);
        dump(vel, traj.velocity.at_node(n));
    }
    std::ofstream pre(dir / "pressure.txt");
    pre << std::setprecision(17);
    for (std::size_t n = 1; n <= mesh.intervals(); ++n) {
        pre << n << ' ' << mesh.midpoint(n);
        dump(pre, traj.pressure.on_interval(n));
    }
}

}  // namespace cnpressure
