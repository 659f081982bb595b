#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cnpressure/exceptions.hpp"

namespace cnpressure {

/// Temporal mesh 0 = t_0 < t_1 < ... < t_N = T with intervals I^n = (t_{n-1}, t_n].
///
/// Intervals are addressed by 1-based index n = 1..N, nodes by 0-based index
/// n = 0..N, matching the usual notation for one-step schemes. Immutable.
class TimeMesh {
public:
    TimeMesh() = default;

    explicit TimeMesh(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2) throw InvalidArgument("time mesh needs at least one interval");
        if (nodes_.front() != 0.0) throw InvalidArgument("time mesh must start at t_0 = 0");
        for (std::size_t n = 1; n < nodes_.size(); ++n) {
            if (!(nodes_[n] > nodes_[n - 1]))
                throw InvalidArgument("time mesh nodes must be strictly increasing (node " +
                                      std::to_string(n) + ")");
        }
    }

    std::size_t intervals() const noexcept { return nodes_.size() - 1; }
    double final_time() const noexcept { return nodes_.back(); }
    std::span<const double> nodes() const noexcept { return nodes_; }
    double node(std::size_t n) const { return nodes_.at(n); }

    /// k_n = t_n - t_{n-1}, n = 1..N
    double step(std::size_t n) const {
        check_interval(n);
        return nodes_[n] - nodes_[n - 1];
    }

    /// t_{n-1/2}
    double midpoint(std::size_t n) const {
        check_interval(n);
        return 0.5 * (nodes_[n - 1] + nodes_[n]);
    }

    double max_step() const {
        double k = 0.0;
        for (std::size_t n = 1; n <= intervals(); ++n) k = std::max(k, step(n));
        return k;
    }

    double min_step() const {
        double k = final_time();
        for (std::size_t n = 1; n <= intervals(); ++n) k = std::min(k, step(n));
        return k;
    }

    /// Adjacency ratio kappa = max_n max(k_n/k_{n+1}, k_{n+1}/k_n); 1 for a single interval.
    double adjacency_ratio() const {
        double kappa = 1.0;
        for (std::size_t n = 1; n < intervals(); ++n) {
            const double q = step(n) / step(n + 1);
            kappa = std::max({kappa, q, 1.0 / q});
        }
        return kappa;
    }

    /// Global ratio rho = max k_n / min k_n.
    double global_ratio() const { return max_step() / min_step(); }

    /// Index n of the interval I^n = (t_{n-1}, t_n] containing t. t = 0 maps to I^1.
    std::size_t interval_containing(double t) const {
        if (t < 0.0 || t > final_time())
            throw InvalidArgument("time " + std::to_string(t) + " outside [0, T]");
        auto it = std::lower_bound(nodes_.begin() + 1, nodes_.end(), t);
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    void check_interval(std::size_t n) const {
        if (n < 1 || n > intervals())
            throw InvalidArgument("interval index " + std::to_string(n) + " out of range 1.." +
                                  std::to_string(intervals()));
    }

    friend bool operator==(const TimeMesh&, const TimeMesh&) = default;

private:
    std::vector<double> nodes_;
};

inline TimeMesh build_uniform_mesh(double T, long long N) {
    if (!(T > 0.0)) throw InvalidArgument("final time must be positive");
    if (N < 1) throw InvalidArgument("interval count must be at least 1");
    std::vector<double> nodes(static_cast<std::size_t>(N) + 1);
    for (long long n = 0; n <= N; ++n)
        nodes[static_cast<std::size_t>(n)] = T * static_cast<double>(n) / static_cast<double>(N);
    nodes.back() = T;
    return TimeMesh(std::move(nodes));
}

/// Steps cycle base_k * pattern[j]. The last step absorbs the remainder so that t_N = T
/// (at most 1.5 times its nominal length).
inline TimeMesh build_alternating_mesh(double T, double base_k, std::span<const double> pattern) {
    if (!(T > 0.0)) throw InvalidArgument("final time must be positive");
    if (!(base_k > 0.0)) throw InvalidArgument("base step must be positive");
    if (pattern.empty()) throw InvalidArgument("step pattern must not be empty");
    for (double f : pattern)
        if (!(f > 0.0)) throw InvalidArgument("step pattern factors must be positive");
    const double mean = std::accumulate(pattern.begin(), pattern.end(), 0.0) /
                        static_cast<double>(pattern.size());
    if (std::abs(mean - 1.0) > 1e-12) throw InvalidArgument("step pattern must average to 1");

    std::vector<double> nodes{0.0};
    double t = 0.0;
    for (std::size_t j = 0;; ++j) {
        const double k = base_k * pattern[j % pattern.size()];
        if (t + k >= T - 0.5 * k) {
            nodes.push_back(T);
            break;
        }
        // Accumulate from whole periods to avoid drift over long meshes.
        const std::size_t period = (j + 1) / pattern.size();
        const std::size_t rest = (j + 1) % pattern.size();
        double next = static_cast<double>(period) * base_k * static_cast<double>(pattern.size());
        for (std::size_t i = 0; i < rest; ++i) next += base_k * pattern[i];
        t = next;
        nodes.push_back(t);
    }
    return TimeMesh(std::move(nodes));
}

inline TimeMesh build_alternating_mesh(double T, double base_k, std::initializer_list<double> pattern) {
    return build_alternating_mesh(T, base_k, std::span<const double>(pattern.begin(), pattern.size()));
}

/// min(t_{n-1}, 1)^alpha on I^n, with 0^0 = 1.
inline double tau_value(const TimeMesh& mesh, std::size_t n, double alpha) {
    mesh.check_interval(n);
    if (alpha < 0.0) throw InvalidArgument("smoothing exponent must be nonnegative");
    if (alpha == 0.0) return 1.0;
    return std::pow(std::min(mesh.node(n - 1), 1.0), alpha);
}

/// Discrete smoothing weight tau_k^alpha, one constant per interval.
class SmoothingWeight {
public:
    SmoothingWeight(const TimeMesh& mesh, double alpha) : alpha_(alpha) {
        if (alpha < 0.0) throw InvalidArgument("smoothing exponent must be nonnegative");
        values_.resize(mesh.intervals());
        for (std::size_t n = 1; n <= mesh.intervals(); ++n) values_[n - 1] = tau_value(mesh, n, alpha);
    }

    /// Unit weight (alpha = 0) on the given mesh.
    static SmoothingWeight none(const TimeMesh& mesh) { return SmoothingWeight(mesh, 0.0); }

    double alpha() const noexcept { return alpha_; }
    double operator()(std::size_t n) const { return values_.at(n - 1); }
    std::size_t intervals() const noexcept { return values_.size(); }

private:
    double alpha_;
    std::vector<double> values_;
};

}  // namespace cnpressure
