#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cnpressure/exceptions.hpp"

namespace cnpressure {

/// Observed convergence order from (k, error) samples.
struct RateFit {
    double slope = 0.0;                 ///< least-squares slope of log(error) against log(k)
    double intercept = 0.0;             ///< log(C) in error ~ C k^slope
    std::vector<double> pairwise;       ///< log(e_i/e_{i+1}) / log(k_i/k_{i+1}), in input order
};

/// Least-squares fit of log(error) = intercept + slope * log(k).
///
/// Requires at least two samples with distinct k and strictly positive errors; a zero error
/// means an exact match (or a bug) and has no logarithm.
inline RateFit fit_rate(std::span<const double> k, std::span<const double> error) {
    if (k.size() != error.size()) throw InvalidArgument("rate fit: k and error lengths differ");
    if (k.size() < 2) throw InvalidArgument("rate fit needs at least two samples");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (!(k[i] > 0.0)) throw InvalidArgument("rate fit: step sizes must be positive");
        if (!(error[i] > 0.0) || !std::isfinite(error[i]))
            throw InvalidArgument("rate fit: errors must be positive and finite (got " +
                                  std::to_string(error[i]) + ")");
    }
    const double n = static_cast<double>(k.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double x = std::log(k[i]);
        const double y = std::log(error[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) <= 1e-300 * (1.0 + sxx)) throw InvalidArgument("rate fit needs distinct step sizes");

    RateFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        if (k[i] == k[i + 1]) throw InvalidArgument("rate fit needs distinct step sizes");
        fit.pairwise.push_back(std::log(error[i] / error[i + 1]) / std::log(k[i] / k[i + 1]));
    }
    return fit;
}

}  // namespace cnpressure
