#pragma once

// Diagonal surrogate of the Stokes operator -P Delta with eigenvalues lambda_j > 0.
// On this solenoidal surrogate the Helmholtz projection is the identity, and the
// V^s norms are computed exactly from the spectral coefficients.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cnpressure/exceptions.hpp"
#include "cnpressure/rate_fit.hpp"
#include "cnpressure/temporal_ops.hpp"
#include "cnpressure/time_mesh.hpp"

namespace cnpressure::spectral {

using Coefficients = Eigen::ArrayXd;

/// Default surrogate spectrum lambda_j = j^2, j = 1..modes.
inline Eigen::ArrayXd laplacian_like_spectrum(int modes = 256) {
    if (modes < 1) throw InvalidArgument("spectrum needs at least one mode");
    return Eigen::ArrayXd::LinSpaced(modes, 1.0, static_cast<double>(modes)).square();
}

struct SpectralField {
    Eigen::ArrayXd eigenvalues;
    Coefficients coeffs;

    SpectralField(Eigen::ArrayXd lambda, Coefficients c) : eigenvalues(std::move(lambda)), coeffs(std::move(c)) {
        if (eigenvalues.size() != coeffs.size()) throw InvalidArgument("spectral field: length mismatch");
        if (eigenvalues.size() == 0 || !(eigenvalues.minCoeff() > 0.0))
            throw InvalidArgument("spectral field: eigenvalues must be positive");
    }
};

/// Homogeneous V^s norm sqrt(sum lambda_j^s c_j^2).
inline double vs_norm(const Eigen::ArrayXd& lambda, const Coefficients& c, double s) {
    return std::sqrt((lambda.pow(s) * c.square()).sum());
}

inline double vs_norm(const SpectralField& f, double s) { return vs_norm(f.eigenvalues, f.coeffs, s); }

/// One Crank-Nicolson step with interval-averaged forcing modes f_avg.
inline Coefficients cn_step(const Eigen::ArrayXd& lambda, const Coefficients& c, double k, const Coefficients& f_avg) {
    if (!(k > 0.0)) throw InvalidArgument("step size must be positive");
    const Eigen::ArrayXd half = 0.5 * k * lambda;
    return ((1.0 - half) * c + k * f_avg) / (1.0 + half);
}

/// One implicit Euler step; f_int holds interval-averaged forcing modes.
inline Coefficients ie_step(const Eigen::ArrayXd& lambda, const Coefficients& c, double k, const Coefficients& f_int) {
    if (!(k > 0.0)) throw InvalidArgument("step size must be positive");
    return (c + k * f_int) / (1.0 + k * lambda);
}

inline SpectralField cn_step_spectral(const SpectralField& state, double k, const SpectralField& f_avg) {
    return {state.eigenvalues, cn_step(state.eigenvalues, state.coeffs, k, f_avg.coeffs)};
}

inline SpectralField ie_step_spectral(const SpectralField& state, double k, const SpectralField& f_int) {
    return {state.eigenvalues, ie_step(state.eigenvalues, state.coeffs, k, f_int.coeffs)};
}

/// cG1 trajectory of spectral states with the dG0 forcing that produced it.
struct SpectralTrajectory {
    TimeMesh mesh;
    std::size_t start = 0;                 ///< first stepped node t_{start}; earlier nodes hold the start value
    std::vector<Coefficients> states;      ///< per node, size N+1
    std::vector<Coefficients> forcing;     ///< per interval, size N (zero before start)
};

/// Crank-Nicolson evolution from node `start` with interval forcing r(n), n = start+1..N.
template <class Forcing>
SpectralTrajectory cn_evolve(const Eigen::ArrayXd& lambda, const TimeMesh& mesh, const Coefficients& initial,
                             Forcing&& r, std::size_t start = 0) {
    if (start >= mesh.intervals()) throw InvalidArgument("start node must precede the final node");
    SpectralTrajectory traj{mesh, start, {}, {}};
    traj.states.assign(start + 1, initial);
    traj.forcing.assign(start, Coefficients::Zero(lambda.size()));
    for (std::size_t n = start + 1; n <= mesh.intervals(); ++n) {
        Coefficients f = r(n);
        traj.states.push_back(cn_step(lambda, traj.states.back(), mesh.step(n), f));
        traj.forcing.push_back(std::move(f));
    }
    return traj;
}

struct StabilityReport {
    int s = 0;
    int smoothing_level = 0;     ///< 0 for the plain estimate
    std::size_t intervals = 0;
    double max_step = 0.0;
    double max_ratio = 0.0;      ///< max over trials of LHS / RHS
    std::vector<double> ratios;  ///< per trial
};

namespace detail {

/// Deterministic per-trial generator seeded from (seed, trial).
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), 0x5eedu};
    return std::mt19937_64(seq);
}

/// Random initial value in V^s and a smooth-in-time forcing in V^{s-1}; the forcing is
/// r(t) = sum_j eta_j cos(omega_j t + phi_j) e_j, averaged exactly over each interval.
struct TrialData {
    Coefficients initial;
    Coefficients amplitude, omega, phase;

    Coefficients average(double a, double b) const {
        const Eigen::ArrayXd sb = (omega * b + phase).sin();
        const Eigen::ArrayXd sa = (omega * a + phase).sin();
        return amplitude * (sb - sa) / (omega * (b - a));
    }
};

inline TrialData make_trial(const Eigen::ArrayXd& lambda, int s, std::mt19937_64& rng) {
    const auto M = lambda.size();
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> freq(0.5, 6.0), phase(0.0, 2.0 * M_PI);
    TrialData d{Coefficients(M), Coefficients(M), Coefficients(M), Coefficients(M)};
    for (Eigen::Index j = 0; j < M; ++j) {
        const double decay = 1.0 / static_cast<double>(j + 1);
        d.initial[j] = normal(rng) * std::pow(lambda[j], -0.5 * s) * decay;
        d.amplitude[j] = normal(rng) * std::pow(lambda[j], -0.5 * (s - 1)) * decay;
        d.omega[j] = freq(rng);
        d.phase[j] = phase(rng);
    }
    return d;
}

/// Norm of a spectral coefficient vector in V^s; bound to a fixed spectrum.
struct VsNorm {
    const Eigen::ArrayXd* lambda;
    double s;
    double operator()(const Coefficients& c) const { return vs_norm(*lambda, c, s); }
};

}  // namespace detail

/// Both sides of the discrete stability estimate
///   ||v||_{Linf V^s} + ||d_t v||_{L2 V^{s-1}} + ||a_k v||_{L2 V^{s+1}} <= C (||v^0||_{V^s} + ||r||_{L2 V^{s-1}})
/// for Crank-Nicolson trajectories with random data; reports LHS / RHS per trial.
inline StabilityReport verify_discrete_stability(int s, const TimeMesh& mesh, int trial_count, std::uint64_t seed,
                                                 const Eigen::ArrayXd& lambda = laplacian_like_spectrum()) {
    if (trial_count < 1) throw InvalidArgument("need at least one trial");
    StabilityReport report{s, 0, mesh.intervals(), mesh.max_step(), 0.0, {}};
    const auto one = SmoothingWeight::none(mesh);
    const auto all = Window::all(mesh);
    for (int trial = 0; trial < trial_count; ++trial) {
        auto rng = detail::trial_rng(seed, static_cast<std::size_t>(trial));
        const auto data = detail::make_trial(lambda, s, rng);
        const auto traj = cn_evolve(lambda, mesh, data.initial,
                                    [&](std::size_t n) { return data.average(mesh.node(n - 1), mesh.node(n)); });
        const GridFunctionCG1<Coefficients> v(mesh, traj.states);
        const GridFunctionDG0<Coefficients> r(mesh, traj.forcing);

        const double lhs =
            weighted_temporal_norm(v, one, TemporalNorm::Linf, detail::VsNorm{&lambda, double(s)}, all) +
            weighted_temporal_norm(time_derivative(v), one, TemporalNorm::L2, detail::VsNorm{&lambda, s - 1.0}, all) +
            weighted_temporal_norm(average(v), one, TemporalNorm::L2, detail::VsNorm{&lambda, s + 1.0}, all);
        const double rhs = vs_norm(lambda, data.initial, s) +
                           weighted_temporal_norm(r, one, TemporalNorm::L2, detail::VsNorm{&lambda, s - 1.0}, all);
        report.ratios.push_back(lhs / rhs);
        report.max_ratio = std::max(report.max_ratio, lhs / rhs);
    }
    return report;
}

/// Both sides of the smoothing stability estimate of regularity level s and smoothing level l,
/// for Crank-Nicolson stepping on J = (t_{n0}, T] with weights tau_k^{l/2}.
inline StabilityReport verify_smoothing_stability(int s, int level, std::size_t n0, const TimeMesh& mesh,
                                                  int trial_count, std::uint64_t seed,
                                                  const Eigen::ArrayXd& lambda = laplacian_like_spectrum()) {
    if (level <= 0) throw InvalidArgument("smoothing level must be positive; use verify_discrete_stability for 0");
    if (trial_count < 1) throw InvalidArgument("need at least one trial");
    if (n0 >= mesh.intervals()) throw InvalidArgument("n0 must leave at least one interval");
    StabilityReport report{s, level, mesh.intervals(), mesh.max_step(), 0.0, {}};
    const SmoothingWeight w(mesh, 0.5 * level);
    const SmoothingWeight w_lower(mesh, 0.5 * (level - 1));
    const Window J = Window::after(mesh, n0);
    const double k = mesh.max_step();
    for (int trial = 0; trial < trial_count; ++trial) {
        auto rng = detail::trial_rng(seed, static_cast<std::size_t>(trial));
        const auto data = detail::make_trial(lambda, s, rng);
        const auto traj = cn_evolve(
            lambda, mesh, data.initial, [&](std::size_t n) { return data.average(mesh.node(n - 1), mesh.node(n)); },
            n0);
        const GridFunctionCG1<Coefficients> v(mesh, traj.states);
        const GridFunctionDG0<Coefficients> r(mesh, traj.forcing);
        const auto av = average(v);
        const auto dv = time_derivative(v);
        using detail::VsNorm;

        const double lhs = weighted_temporal_norm(v, w, TemporalNorm::Linf, VsNorm{&lambda, double(s)}, J) +
                           weighted_temporal_norm(av, w, TemporalNorm::L2, VsNorm{&lambda, s + 1.0}, J) +
                           weighted_temporal_norm(dv, w, TemporalNorm::L2, VsNorm{&lambda, s - 1.0}, J);
        const double rhs = std::pow(k, 0.5 * level) * vs_norm(lambda, traj.states[n0], s) +
                           weighted_temporal_norm(r, w, TemporalNorm::L2, VsNorm{&lambda, s - 1.0}, J) +
                           weighted_temporal_norm(av, w_lower, TemporalNorm::L2, VsNorm{&lambda, double(s)}, J) +
                           k * weighted_temporal_norm(dv, w_lower, TemporalNorm::L2, VsNorm{&lambda, double(s)}, J);
        report.ratios.push_back(lhs / rhs);
        report.max_ratio = std::max(report.max_ratio, lhs / rhs);
    }
    return report;
}

/// Largest relative change of max_ratio between consecutive reports (refinements).
inline double ratio_drift(std::span<const StabilityReport> reports) {
    double drift = 0.0;
    for (std::size_t i = 1; i < reports.size(); ++i)
        drift = std::max(drift, std::abs(reports[i].max_ratio / reports[i - 1].max_ratio - 1.0));
    return drift;
}

struct EulerRateReport {
    int r = 0, s = 0, s0 = 0;
    int n0 = 0;
    double expected = 0.0;          ///< (r - s) / 2
    std::vector<double> steps;
    std::vector<double> errors;
    RateFit fit;
};

/// V^s error at t_{n0} after n0 = 2 + s0 - r implicit Euler steps from data that lies in
/// V^r but in no V^{r+0.1}; f = 0 so the exact modes are exp(-lambda_j t) c_j.
inline EulerRateReport euler_smoothing_rate(int r, int s, int s0, std::span<const double> k_list,
                                            const Eigen::ArrayXd& lambda = laplacian_like_spectrum()) {
    if (k_list.empty()) throw InvalidArgument("step list must not be empty");
    if (r < 0 || r > 2) throw InvalidArgument("initial regularity must be in {0, 1, 2}");
    if (s0 < 1 || s0 > 2) throw InvalidArgument("s0 must be 1 or 2");
    EulerRateReport rep;
    rep.r = r;
    rep.s = s;
    rep.s0 = s0;
    rep.n0 = 2 + s0 - r;
    rep.expected = 0.5 * (r - s);

    const Eigen::ArrayXd j = Eigen::ArrayXd::LinSpaced(lambda.size(), 1.0, static_cast<double>(lambda.size()));
    const Coefficients c0 = j.pow(-r - 0.6);
    const Coefficients zero = Coefficients::Zero(lambda.size());
    for (double k : k_list) {
        Coefficients c = c0;
        for (int n = 0; n < rep.n0; ++n) c = ie_step(lambda, c, k, zero);
        const Coefficients exact = (-lambda * (rep.n0 * k)).exp() * c0;
        rep.steps.push_back(k);
        rep.errors.push_back(vs_norm(lambda, Coefficients(exact - c), s));
    }
    if (rep.steps.size() >= 2) rep.fit = fit_rate(rep.steps, rep.errors);
    return rep;
}

}  // namespace cnpressure::spectral
