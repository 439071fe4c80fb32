#pragma once

#include "cwl/trace.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cwl {

/// Name of the generator recorded alongside synthetic outputs.
inline constexpr std::string_view kSyntheticRng = "mt19937_64";

struct SyntheticSpec {
    int pp_tps = 336;
    std::size_t tps = 3 * 336;
    double base_lambda = 10.0; ///< mean count per sub-bin
    double daily_amp = 0.2;    ///< seven daily cycles per pattern period
    double weekly_amp = 0.3;   ///< one cycle per pattern period
    double noise_sigma = 0.0;  ///< multiplicative lognormal noise per TP
    std::uint64_t seed = 1;
    int tp_minutes = 30;
    int sub_bin_seconds = 60;
    std::int64_t start_us = 0;

    void validate() const {
        if (pp_tps < 1) throw std::invalid_argument("synthetic: pp_tps must be positive");
        if (!(base_lambda > 0.0) || !std::isfinite(base_lambda)) {
            throw std::invalid_argument("synthetic: base lambda must be positive");
        }
        if (!(daily_amp >= 0.0 && daily_amp < 1.0) || !(weekly_amp >= 0.0 && weekly_amp < 1.0)) {
            throw std::invalid_argument("synthetic: amplitudes must lie in [0, 1)");
        }
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
            throw std::invalid_argument("synthetic: noise sigma must be nonnegative");
        }
        if (tp_minutes < 1 || sub_bin_seconds < 1 || (tp_minutes * 60) % sub_bin_seconds != 0) {
            throw std::invalid_argument("synthetic: sub-bin must divide the TP length");
        }
        if (start_us < 0) throw std::invalid_argument("synthetic: negative start offset");
    }

    int sub_bins_per_tp() const { return tp_minutes * 60 / sub_bin_seconds; }
};

/// Deterministic variates built only on the raw 64-bit engine output, so the
/// streams do not depend on a standard library's distribution algorithms.
class SyntheticRng {
public:
    explicit SyntheticRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t bits() { return engine_(); }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) return poisson_inversion(lambda);
        return poisson_ptrs(lambda);
    }

private:
    std::uint64_t poisson_inversion(double lambda) {
        const double u = uniform();
        double p = std::exp(-lambda);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    // Hormann's transformed rejection with squeeze.
    std::uint64_t poisson_ptrs(double lambda) {
        const double slam = std::sqrt(lambda);
        const double loglam = std::log(lambda);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        while (true) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::abs(u);
            const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if (us >= 0.07 && v <= vr) {
                return static_cast<std::uint64_t>(k);
            }
            if (k < 0.0 || (us < 0.013 && v > us)) {
                continue;
            }
            if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
                -lambda + k * loglam - std::lgamma(k + 1.0)) {
                return static_cast<std::uint64_t>(k);
            }
        }
    }

    std::mt19937_64 engine_;
};

struct SyntheticTrace {
    std::vector<TraceEvent> events;
    std::vector<double> true_lambda;                 ///< per TP, per sub-bin rate
    std::vector<std::vector<std::uint64_t>> counts;  ///< drawn sub-bin counts per TP
};

/// Noise-free intensity at global TP index t (0-based).
inline double synthetic_intensity(const SyntheticSpec& spec, std::size_t t) {
    const double phase =
        static_cast<double>(t % static_cast<std::size_t>(spec.pp_tps)) / spec.pp_tps;
    const double two_pi = 2.0 * std::numbers::pi;
    return spec.base_lambda * (1.0 + spec.daily_amp * std::sin(two_pi * 7.0 * phase)) *
           (1.0 + spec.weekly_amp * std::sin(two_pi * phase));
}

/// Cyclic Poisson trace with known per-TP rates. Each sub-bin count is drawn
/// from Poisson(rate); events are spaced evenly inside their sub-bin.
inline SyntheticTrace generate(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticRng rng(spec.seed);
    SyntheticTrace out;
    out.true_lambda.reserve(spec.tps);
    out.counts.reserve(spec.tps);
    const std::int64_t tp_us = std::int64_t{spec.tp_minutes} * 60 * kMicrosPerSecond;
    const std::int64_t bin_us = std::int64_t{spec.sub_bin_seconds} * kMicrosPerSecond;
    const int bins = spec.sub_bins_per_tp();

    for (std::size_t t = 0; t < spec.tps; ++t) {
        double rate = synthetic_intensity(spec, t);
        if (spec.noise_sigma > 0.0) {
            const double s = spec.noise_sigma;
            rate *= std::exp(s * rng.normal() - 0.5 * s * s);
        }
        out.true_lambda.push_back(rate);
        auto& tp_counts = out.counts.emplace_back(static_cast<std::size_t>(bins));
        const std::int64_t tp_start = spec.start_us + static_cast<std::int64_t>(t) * tp_us;
        for (int k = 0; k < bins; ++k) {
            const std::uint64_t c = rng.poisson(rate);
            tp_counts[static_cast<std::size_t>(k)] = c;
            const std::int64_t bin_start = tp_start + k * bin_us;
            for (std::uint64_t j = 0; j < c; ++j) {
                TraceEvent ev;
                ev.timestamp_us =
                    bin_start + static_cast<std::int64_t>((2 * j + 1) * static_cast<std::uint64_t>(bin_us) /
                                                          (2 * c));
                ev.job_id = "j" + std::to_string(t + 1);
                ev.task_id = std::to_string(k) + "-" + std::to_string(j);
                ev.cpu_request = static_cast<double>(1 + rng.bits() % 50) / 1000.0;
                ev.mem_request = static_cast<double>(1 + rng.bits() % 50) / 2000.0;
                out.events.push_back(std::move(ev));
            }
        }
    }
    return out;
}

} // namespace cwl
