#pragma once

#include "cwl/cyclic_dataset.hpp"
#include "cwl/llr.hpp"
#include "cwl/poisson.hpp"
#include "cwl/trace.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwl {

struct ForecastConfig {
    int tp_minutes = 30;
    int pp_tps = 336; ///< m: TPs per pattern period (one week of 30-minute TPs)
    int up_tps = 50;  ///< n: TPs in the utilization window (25 hours)
    int cycles = 2;   ///< l: pattern periods kept in the store
    KernelSpec kernel{};
    MetricKind metric = MetricKind::Arrivals;
    int sub_bin_seconds = 60;
    double scale = 100.0;

    void validate() const {
        if (tp_minutes < 1) throw std::invalid_argument("tp_minutes must be positive");
        if (pp_tps < 1) throw std::invalid_argument("pp_tps must be positive");
        if (up_tps < 1 || up_tps > pp_tps) {
            throw std::invalid_argument("up_tps must lie in [1, pp_tps]");
        }
        if (cycles < 1) throw std::invalid_argument("cycles must be positive");
        if (sub_bin_seconds < 1 || (tp_minutes * 60) % sub_bin_seconds != 0) {
            throw std::invalid_argument("sub_bin_seconds must divide the TP length");
        }
        if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
        kernel.validate();
    }

    AggregationConfig aggregation(std::int64_t start_us = 0) const {
        return {tp_minutes, pp_tps, sub_bin_seconds, scale, start_us};
    }
};

struct PredictionRecord {
    long long t = 0;               ///< 1-based step index
    int tp_index = 0;              ///< position on the pattern period
    std::optional<double> predicted; ///< empty during warm-up
    double actual = 0.0;
    Fallback fallback = Fallback::None;

    bool warmup() const noexcept { return !predicted.has_value(); }

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// LLR over the utilization window, queried at its trailing offset n and
/// clamped at zero. Throws empty_window_error when nothing is stored yet.
inline LlrPrediction predict_step(const CyclicDataset& ds, const ForecastConfig& cfg) {
    const auto window = ds.extract_window(cfg.up_tps);
    const auto points = window.points();
    KernelSpec spec = cfg.kernel;
    if (auto* kn = std::get_if<KNearest>(&spec.bandwidth)) {
        // Warm-up and short windows can hold fewer than k entries.
        kn->k = std::min(kn->k, static_cast<int>(points.size()));
    }
    auto out = llr_predict(points, static_cast<double>(window.n), spec);
    out.value = std::max(out.value, 0.0);
    return out;
}

inline double observe_lambda(CyclicDataset& ds, int tp_index, double lambda) {
    if (tp_index != ds.p()) {
        throw std::invalid_argument("observation for TP " + std::to_string(tp_index) +
                                    " does not match cursor " + std::to_string(ds.p()));
    }
    ds.update(lambda);
    return lambda;
}

/// MLE of the observed period, stored at the cursor; returns the fitted rate.
inline double observe_step(CyclicDataset& ds, const PeriodObservation& obs) {
    return observe_lambda(ds, obs.tp_index, poisson_mle(obs).lambda);
}

/// Online driver: predict the next TP, then fold in its observation.
class CyclicWindowForecaster {
public:
    explicit CyclicWindowForecaster(ForecastConfig cfg)
        : cfg_(validated(std::move(cfg))), ds_(cfg_.pp_tps, cfg_.cycles) {}

    const ForecastConfig& config() const noexcept { return cfg_; }
    const CyclicDataset& dataset() const noexcept { return ds_; }

    std::optional<LlrPrediction> predict() const {
        if (ds_.populated_in_window(cfg_.up_tps) == 0) {
            return std::nullopt;
        }
        return predict_step(ds_, cfg_);
    }

    /// One loop iteration for a fitted parameter. The parameter must sit at the
    /// cursor position and continue the (cycle, TP) sequence.
    PredictionRecord step(const PeriodParameter& param) {
        check_order(param.tp_index, param.cycle_index);
        PredictionRecord rec;
        rec.t = ds_.t();
        rec.tp_index = ds_.p();
        if (auto pred = predict()) {
            rec.predicted = pred->value;
            rec.fallback = pred->fallback;
        }
        rec.actual = observe_lambda(ds_, param.tp_index, param.lambda);
        return rec;
    }

    PredictionRecord step(const PeriodObservation& obs) { return step(fit_period(obs)); }

private:
    static ForecastConfig validated(ForecastConfig cfg) {
        cfg.validate();
        return cfg;
    }

    void check_order(int tp_index, int cycle_index) {
        if (last_) {
            auto [lt, lc] = *last_;
            const bool next = (tp_index == lt + 1 && cycle_index == lc) ||
                              (lt == cfg_.pp_tps && tp_index == 1 && cycle_index == lc + 1);
            if (!next) {
                throw data_error("out-of-order stream: (" + std::to_string(cycle_index) + "," +
                                 std::to_string(tp_index) + ") after (" + std::to_string(lc) +
                                 "," + std::to_string(lt) + ")");
            }
        } else if (tp_index != ds_.p()) {
            throw data_error("stream must start at TP position " + std::to_string(ds_.p()));
        }
        last_ = {tp_index, cycle_index};
    }

    ForecastConfig cfg_;
    CyclicDataset ds_;
    std::optional<std::pair<int, int>> last_;
};

inline std::vector<PredictionRecord> run(std::span<const PeriodParameter> stream,
                                         const ForecastConfig& cfg) {
    CyclicWindowForecaster f(cfg);
    std::vector<PredictionRecord> out;
    out.reserve(stream.size());
    for (const auto& p : stream) {
        out.push_back(f.step(p));
    }
    return out;
}

inline std::vector<PredictionRecord> run(std::span<const PeriodObservation> stream,
                                         const ForecastConfig& cfg) {
    std::vector<PeriodParameter> params;
    params.reserve(stream.size());
    for (const auto& o : stream) {
        params.push_back(fit_period(o));
    }
    return run(params, cfg);
}

/// Ingests `tp_count` TPs of raw events from `start_us` and runs the driver.
inline std::vector<PredictionRecord> run(std::span<const TraceEvent> events,
                                         const ForecastConfig& cfg, std::int64_t start_us,
                                         std::size_t tp_count) {
    cfg.validate();
    const auto obs = aggregate_trace(events, cfg.aggregation(start_us), cfg.metric, tp_count);
    return run(std::span<const PeriodObservation>(obs), cfg);
}

/// Recency-weighted average over the last `window` values, with the value i
/// steps before the newest weighted by the Poisson(window) pmf at i.
inline double baseline_poisson_window(std::span<const double> history, int window) {
    if (history.empty()) {
        throw std::invalid_argument("baseline_poisson_window: empty history");
    }
    if (window < 1) {
        throw std::invalid_argument("baseline_poisson_window: window must be positive");
    }
    const PoissonParam weights(static_cast<double>(window));
    const std::size_t span = std::min(history.size(), static_cast<std::size_t>(window));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < span; ++i) {
        const double w = poisson_pmf(weights, static_cast<std::int64_t>(i));
        num += w * history[history.size() - 1 - i];
        den += w;
    }
    return den > 0.0 ? num / den : history.back();
}

inline double baseline_naive(std::span<const double> history) {
    if (history.empty()) {
        throw std::invalid_argument("baseline_naive: empty history");
    }
    return history.back();
}

} // namespace cwl
