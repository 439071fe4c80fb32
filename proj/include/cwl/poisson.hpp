#pragma once

#include "cwl/trace.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace cwl {

/// Poisson rate parameter. Zero is legal and denotes a point mass at 0.
struct PoissonParam {
    double lambda = 0.0;

    explicit PoissonParam(double l = 0.0) : lambda(l) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw std::invalid_argument("PoissonParam: lambda must be finite and nonnegative");
        }
    }
};

/// Maximum-likelihood rate of i.i.d. Poisson counts: the sample mean.
inline PoissonParam poisson_mle(std::span<const std::uint64_t> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("poisson_mle: empty sample vector");
    }
    // Integer accumulation is exact, so the only rounding is the final division.
    unsigned __int128 sum = 0;
    for (auto s : samples) {
        sum += s;
    }
    return PoissonParam(static_cast<double>(sum) / static_cast<double>(samples.size()));
}

inline PoissonParam poisson_mle(const PeriodObservation& obs) { return poisson_mle(obs.samples); }

/// log L(lambda) for i.i.d. counts, including the log-factorial terms.
inline double poisson_log_likelihood(std::span<const std::uint64_t> samples, double lambda) {
    double sum = 0.0;
    for (auto s : samples) {
        const double k = static_cast<double>(s);
        if (lambda == 0.0) {
            if (s != 0) return -std::numeric_limits<double>::infinity();
            continue;
        }
        sum += k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
    }
    return sum;
}

inline double poisson_log_pmf(PoissonParam param, std::int64_t k) {
    if (k < 0) {
        throw std::invalid_argument("poisson_pmf: negative k");
    }
    if (param.lambda == 0.0) {
        return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    const double kd = static_cast<double>(k);
    return kd * std::log(param.lambda) - param.lambda - std::lgamma(kd + 1.0);
}

/// lambda^k e^-lambda / k!, evaluated in log space.
inline double poisson_pmf(PoissonParam param, std::int64_t k) {
    return std::exp(poisson_log_pmf(param, k));
}

inline double poisson_cdf(PoissonParam param, std::int64_t k) {
    if (k < 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) {
        acc += poisson_pmf(param, i);
    }
    return acc > 1.0 ? 1.0 : acc;
}

/// Smallest k with CDF(k) >= p, the CDF accumulated term by term.
inline std::int64_t poisson_quantile(PoissonParam param, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("poisson_quantile: p must lie in (0, 1)");
    }
    if (param.lambda == 0.0) {
        return 0;
    }
    // Past this point the remaining tail is below double resolution.
    const double lam = param.lambda;
    const auto limit = static_cast<std::int64_t>(std::ceil(lam + 40.0 * std::sqrt(lam) + 100.0));
    double acc = 0.0;
    for (std::int64_t k = 0;; ++k) {
        acc += poisson_pmf(param, k);
        if (acc >= p || k >= limit) {
            return k;
        }
    }
}

/// Fitted rate for one (TP position, cycle) cell of the parameter matrix.
struct PeriodParameter {
    int tp_index = 1;
    int cycle_index = 1;
    MetricKind metric = MetricKind::Arrivals;
    double lambda = 0.0;
    bool idle = false; ///< every sample was zero

    friend bool operator==(const PeriodParameter&, const PeriodParameter&) = default;
};

inline PeriodParameter fit_period(const PeriodObservation& obs) {
    PeriodParameter out;
    out.tp_index = obs.tp_index;
    out.cycle_index = obs.cycle_index;
    out.metric = obs.metric;
    out.lambda = poisson_mle(obs).lambda;
    out.idle = out.lambda == 0.0;
    return out;
}

} // namespace cwl
