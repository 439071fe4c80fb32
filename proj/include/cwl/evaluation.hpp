#pragma once

#include "cwl/forecaster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <exception>
#include <vector>

namespace cwl {

struct MapeResult {
    double mape = 0.0;
    std::vector<double> errors; ///< |P-T|/T for each retained pair, in input order
    std::size_t retained = 0;
    std::size_t skipped_zero_targets = 0;
};

/// Mean absolute percentage error as a fraction. Pairs with a zero target are
/// excluded and counted rather than divided by an epsilon.
inline MapeResult mape(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size()) {
        throw std::invalid_argument("mape: length mismatch");
    }
    MapeResult r;
    double sum = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
        if (target[j] == 0.0) {
            ++r.skipped_zero_targets;
            continue;
        }
        const double e = std::abs(predicted[j] - target[j]) / target[j];
        r.errors.push_back(e);
        sum += e;
    }
    r.retained = r.errors.size();
    if (r.retained == 0) {
        throw std::invalid_argument("mape: no nonzero targets");
    }
    r.mape = sum / static_cast<double>(r.retained);
    return r;
}

/// Relative improvement of a over b, in percent: (b - a) / b * 100.
inline double compare(double mape_a, double mape_b) {
    if (mape_b == 0.0) {
        throw std::invalid_argument("compare: reference MAPE is zero");
    }
    return (mape_b - mape_a) / mape_b * 100.0;
}

struct BaselineRecord {
    long long t = 0;
    double naive = 0.0;
    double poisson_window = 0.0;

    friend bool operator==(const BaselineRecord&, const BaselineRecord&) = default;
};

inline constexpr int kDefaultBaselineWindow = 4;

/// Baseline predictions for records[from..], each using the actual rates of
/// all earlier records as history.
inline std::vector<BaselineRecord> compute_baselines(std::span<const PredictionRecord> records,
                                                     std::size_t from, int poisson_window) {
    std::vector<double> history;
    history.reserve(records.size());
    std::vector<BaselineRecord> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i >= from && !history.empty()) {
            out.push_back({records[i].t, baseline_naive(history),
                           baseline_poisson_window(history, poisson_window)});
        }
        history.push_back(records[i].actual);
    }
    return out;
}

struct ComparatorDelta {
    std::string name;
    double mape = 0.0;
    double improvement_pct = 0.0; ///< compare(ours, baseline)
};

struct EvaluationReport {
    std::string config_id;
    int up_tps = 0;
    double bandwidth = 0.0;
    double mape = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> errors;
    std::size_t n = 0; ///< records considered
    std::size_t warmup_skipped = 0;
    std::size_t skipped_zero_targets = 0;
    bool insufficient_training = false;
    std::vector<ComparatorDelta> comparators;
};

/// MAPE of the numeric predictions in `records` against their actual rates.
/// Baselines, when given, are matched by step index and scored on the same pairs.
inline EvaluationReport evaluate_records(std::span<const PredictionRecord> records,
                                         std::span<const BaselineRecord> baselines = {}) {
    EvaluationReport rep;
    rep.n = records.size();
    std::vector<double> pred, target, naive, pwin;
    std::size_t b = 0;
    for (const auto& r : records) {
        if (r.warmup()) {
            ++rep.warmup_skipped;
            continue;
        }
        pred.push_back(*r.predicted);
        target.push_back(r.actual);
        if (!baselines.empty()) {
            while (b < baselines.size() && baselines[b].t < r.t) ++b;
            if (b == baselines.size() || baselines[b].t != r.t) {
                throw data_error("baseline record missing for step " + std::to_string(r.t));
            }
            naive.push_back(baselines[b].naive);
            pwin.push_back(baselines[b].poisson_window);
        }
    }
    if (pred.empty()) {
        return rep;
    }
    const auto m = mape(pred, target);
    rep.mape = m.mape;
    rep.errors = m.errors;
    rep.skipped_zero_targets = m.skipped_zero_targets;
    if (!baselines.empty()) {
        for (auto [name, values] : {std::pair{"naive", &naive}, std::pair{"poisson_window", &pwin}}) {
            const double bm = mape(*values, target).mape;
            ComparatorDelta d{name, bm, bm == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                                  : compare(rep.mape, bm)};
            rep.comparators.push_back(std::move(d));
        }
    }
    return rep;
}

inline std::string config_id(const ForecastConfig& cfg) {
    std::string id = "up=" + std::to_string(cfg.up_tps);
    if (const auto* kn = std::get_if<KNearest>(&cfg.kernel.bandwidth)) {
        id += ";k=" + std::to_string(kn->k);
    } else {
        id += ";h=" + format_double(std::get<FixedRadius>(cfg.kernel.bandwidth).h);
    }
    id += ";kernel=" + std::string(to_string(cfg.kernel.family));
    id += ";l=" + std::to_string(cfg.cycles);
    return id;
}

struct SweepOptions {
    bool baselines = true;
    int baseline_window = kDefaultBaselineWindow;
    unsigned jobs = 1;
};

/// Trains on `train` then scores the predictions made over `test`.
inline EvaluationReport evaluate_config(const ForecastConfig& cfg,
                                        std::span<const PeriodParameter> train,
                                        std::span<const PeriodParameter> test,
                                        const SweepOptions& opts = {}) {
    std::vector<PeriodParameter> stream(train.begin(), train.end());
    stream.insert(stream.end(), test.begin(), test.end());
    const auto records = run(std::span<const PeriodParameter>(stream), cfg);
    const std::span<const PredictionRecord> all(records);
    const auto test_records = all.subspan(train.size());
    std::vector<BaselineRecord> base;
    if (opts.baselines) {
        base = compute_baselines(all, train.size(), opts.baseline_window);
    }
    auto rep = evaluate_records(test_records, base);
    rep.config_id = config_id(cfg);
    rep.up_tps = cfg.up_tps;
    rep.bandwidth = cfg.kernel.bandwidth_value();
    rep.insufficient_training =
        train.size() < static_cast<std::size_t>(cfg.cycles) * static_cast<std::size_t>(cfg.pp_tps);
    return rep;
}

/// One report per configuration, ordered by (up_tps, bandwidth). Cells are
/// independent and run on up to `opts.jobs` threads.
inline std::vector<EvaluationReport> sweep(std::span<const ForecastConfig> grid,
                                           std::span<const PeriodParameter> train,
                                           std::span<const PeriodParameter> test,
                                           const SweepOptions& opts = {}) {
    if (test.empty()) {
        throw std::invalid_argument("sweep: empty test stream");
    }
    std::vector<EvaluationReport> reports(grid.size());
    std::vector<std::exception_ptr> failures(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                reports[i] = evaluate_config(grid[i], train, test, opts);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(grid.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        return std::tie(a.up_tps, a.bandwidth) < std::tie(b.up_tps, b.bandwidth);
    });
    return reports;
}

} // namespace cwl
