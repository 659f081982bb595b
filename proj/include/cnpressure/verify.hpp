#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cnpressure/rate_fit.hpp"
#include "cnpressure/spectral.hpp"
#include "cnpressure/temporal_ops.hpp"
#include "cnpressure/time_mesh.hpp"

namespace cnpressure::verify {

/// One measured quantity and its acceptance interval [lower, upper].
struct Check {
    std::string name;
    double measured = 0.0;
    double lower = -INFINITY;
    double upper = INFINITY;

    bool passed() const { return measured >= lower && measured <= upper; }
};

struct Report {
    std::string target;
    std::vector<Check> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed()) return false;
        return !checks.empty();
    }

    void add(std::string name, double measured, double lower, double upper) {
        checks.push_back({std::move(name), measured, lower, upper});
    }
};

inline void write_report(std::ostream& os, const Report& r) {
    os << "check,measured,lower,upper,result\n";
    os << std::setprecision(17);
    for (const auto& c : r.checks)
        os << c.name << ',' << c.measured << ',' << c.lower << ',' << c.upper << ',' << (c.passed() ? "pass" : "FAIL")
           << '\n';
}

namespace detail {

template <class G>
double sup_error(const TimeCallable<double>& u, const G& g, double T, int samples = 20000) {
    double e = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double t = T * i / samples;
        e = std::max(e, std::abs(u(t) - g(t)));
    }
    return e;
}

}  // namespace detail

/// Interpolation, averaging and midpoint orders for u = sin t on [0, 2], N in {16, 32, 64}.
inline Report temporal_orders() {
    const TimeCallable<double> u = [](double t) { return std::sin(t); };
    std::vector<double> ks, e_interp, e_avg_mid, e_avg_interp;
    for (long long N : {16, 32, 64}) {
        const auto m = build_uniform_mesh(2.0, N);
        const auto iu = interpolate_nodal(u, m);
        const auto au = average(u, m);
        const auto mu = midpoint_sample(u, m);
        ks.push_back(m.max_step());
        e_interp.push_back(detail::sup_error(u, iu, 2.0));
        e_avg_interp.push_back(detail::sup_error(u, average(iu), 2.0));
        double e = 0.0;
        for (std::size_t n = 1; n <= m.intervals(); ++n) e = std::max(e, std::abs(au.on_interval(n) - mu.on_interval(n)));
        e_avg_mid.push_back(e);
    }
    Report r{"temporal", {}};
    r.add("rate u-i_k u", fit_rate(ks, e_interp).slope, 1.85, 2.15);
    r.add("rate a_k u-m_k u", fit_rate(ks, e_avg_mid).slope, 1.85, 2.15);
    r.add("rate u-a_k i_k u", fit_rate(ks, e_avg_interp).slope, 0.85, 1.15);
    return r;
}

/// Per-mode CN/IE amplification factors against closed forms, and monotone decay of
/// undriven CN and IE trajectories in V^s for s in {-2, ..., 4}.
inline Report spectral_exactness() {
    using namespace spectral;
    const auto lambda = laplacian_like_spectrum();
    const Coefficients one = Coefficients::Ones(lambda.size());
    const Coefficients zero = Coefficients::Zero(lambda.size());
    double worst_cn = 0.0, worst_ie = 0.0;
    for (double k : {1e-4, 0.0025, 0.02, 0.3, 2.0}) {
        const Coefficients cn = cn_step(lambda, one, k, zero);
        const Coefficients ie = ie_step(lambda, one, k, zero);
        for (Eigen::Index j = 0; j < lambda.size(); ++j) {
            const double g_cn = (1.0 - 0.5 * k * lambda[j]) / (1.0 + 0.5 * k * lambda[j]);
            const double g_ie = 1.0 / (1.0 + k * lambda[j]);
            worst_cn = std::max(worst_cn, std::abs(cn[j] - g_cn) / std::max(std::abs(g_cn), 1e-300));
            worst_ie = std::max(worst_ie, std::abs(ie[j] - g_ie) / std::abs(g_ie));
        }
    }
    const Eigen::ArrayXd j = Eigen::ArrayXd::LinSpaced(lambda.size(), 1.0, static_cast<double>(lambda.size()));
    const auto mesh = build_alternating_mesh(2.0, 0.02, {0.8, 1.2});
    double worst_growth = -INFINITY;
    for (bool euler : {false, true}) {
        Coefficients c = j.pow(-1.1);
        for (std::size_t n = 1; n <= mesh.intervals(); ++n) {
            const Coefficients next = euler ? ie_step(lambda, c, mesh.step(n), zero) : cn_step(lambda, c, mesh.step(n), zero);
            for (int s = -2; s <= 4; ++s)
                worst_growth = std::max(worst_growth, vs_norm(lambda, next, s) / vs_norm(lambda, c, s) - 1.0);
            c = next;
        }
    }
    Report r{"spectral-exactness", {}};
    r.add("max relative CN amplification error", worst_cn, 0.0, 1e-14);
    r.add("max relative IE amplification error", worst_ie, 0.0, 1e-14);
    r.add("max V^s norm growth per step", worst_growth, -INFINITY, 0.0);
    return r;
}

/// Drift of the discrete stability ratio over three refinements, s in {0, 1, 2}.
inline Report stability_drift(int trials = 50, std::uint64_t seed = 0) {
    Report r{"spectral-stability", {}};
    for (int s : {0, 1, 2}) {
        std::vector<spectral::StabilityReport> reps;
        for (double k : {0.02, 0.01, 0.005})
            reps.push_back(spectral::verify_discrete_stability(s, build_alternating_mesh(2.0, k, {0.8, 1.2}), trials, seed));
        r.add("ratio drift s=" + std::to_string(s), spectral::ratio_drift(reps), 0.0, 0.1);
    }
    return r;
}

/// Drift of the smoothing stability ratio over three refinements, stepping from t_1.
inline Report smoothing_drift(int trials = 50, std::uint64_t seed = 0) {
    Report r{"spectral-smoothing", {}};
    for (auto [s, level] : {std::pair{1, 1}, std::pair{1, 2}, std::pair{2, 1}}) {
        std::vector<spectral::StabilityReport> reps;
        for (double k : {0.02, 0.01, 0.005})
            reps.push_back(
                spectral::verify_smoothing_stability(s, level, 1, build_alternating_mesh(2.0, k, {0.8, 1.2}), trials, seed));
        r.add("ratio drift s=" + std::to_string(s) + " l=" + std::to_string(level), spectral::ratio_drift(reps), 0.0, 0.1);
    }
    return r;
}

/// Fitted V^s error rates after n0 = 2 + s0 - r Euler steps from sharp V^r data.
inline Report euler_rates() {
    const std::vector<double> ks{0.02, 0.01, 0.005, 0.0025};
    Report r{"euler-rates", {}};
    auto name = [](int rr, int s, int s0) {
        return "rate r=" + std::to_string(rr) + " s=" + std::to_string(s) + " s0=" + std::to_string(s0);
    };
    for (auto [rr, s, s0] : {std::tuple{2, 4, 2}, std::tuple{2, 3, 2}, std::tuple{0, 2, 2}}) {
        const auto rep = spectral::euler_smoothing_rate(rr, s, s0, ks);
        r.add(name(rr, s, s0), rep.fit.slope, rep.expected - 0.2, rep.expected + 0.2);
    }
    for (auto [rr, s0] : {std::pair{0, 2}, std::pair{1, 1}, std::pair{2, 2}}) {
        const auto rep = spectral::euler_smoothing_rate(rr, rr, s0, ks);
        r.add(name(rr, rr, s0), rep.fit.slope, -0.1, 0.1);
    }
    return r;
}

}  // namespace cnpressure::verify
