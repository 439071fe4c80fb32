#pragma once

#include "cwl/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cwl {

inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;

/// One task record from a cluster trace.
struct TraceEvent {
    std::int64_t timestamp_us = 0; ///< microseconds since trace epoch
    std::string job_id;
    std::string task_id;
    double cpu_request = 0.0; ///< core count
    double mem_request = 0.0; ///< normalized bytes fraction

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

enum class MetricKind { Arrivals, Cpu, Memory };

inline constexpr MetricKind kAllMetrics[] = {MetricKind::Arrivals, MetricKind::Cpu,
                                             MetricKind::Memory};

inline std::string_view to_string(MetricKind m) {
    switch (m) {
    case MetricKind::Arrivals:
        return "arrivals";
    case MetricKind::Cpu:
        return "cpu";
    case MetricKind::Memory:
        return "memory";
    }
    return "unknown";
}

inline std::optional<MetricKind> parse_metric(std::string_view s) {
    s = trim(s);
    if (s == "arrivals") return MetricKind::Arrivals;
    if (s == "cpu") return MetricKind::Cpu;
    if (s == "memory" || s == "mem") return MetricKind::Memory;
    return std::nullopt;
}

/// Count samples X_1..X_n extracted from one target period for one metric.
struct PeriodObservation {
    int tp_index = 1;    ///< position within the pattern period, 1-based
    int cycle_index = 1; ///< pattern-period number, 1-based
    MetricKind metric = MetricKind::Arrivals;
    std::vector<std::uint64_t> samples;
    int sub_bin_seconds = 60;
    double scale = 1.0;

    friend bool operator==(const PeriodObservation&, const PeriodObservation&) = default;
};

/// A column selected either by zero-based index or by header name.
using ColumnRef = std::variant<std::size_t, std::string>;

enum class HeaderMode { Auto, Present, Absent };

struct TraceFormat {
    char delimiter = ',';
    HeaderMode header = HeaderMode::Auto;
    ColumnRef ts_col = std::size_t{0};
    std::optional<ColumnRef> job_col = std::size_t{1};
    std::optional<ColumnRef> task_col = std::size_t{2};
    ColumnRef cpu_col = std::size_t{3};
    ColumnRef mem_col = std::size_t{4};
};

struct ParseResult {
    std::vector<TraceEvent> events; ///< sorted by timestamp (stable)
    std::size_t rows = 0;           ///< data rows seen, header excluded
    std::size_t rejected = 0;
};

namespace detail {

inline std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string>& header) {
    if (const auto* idx = std::get_if<std::size_t>(&ref)) {
        return *idx;
    }
    const auto& name = std::get<std::string>(ref);
    if (header.empty()) {
        throw data_error("column '" + name + "' selected by name but the trace has no header");
    }
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw data_error("mapped column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
}

inline bool is_blank(std::string_view line) { return trim(line).empty(); }

} // namespace detail

/// Parses a delimited-text trace. Malformed rows are skipped and tallied.
/// Throws data_error when the stream is unreadable or a named column is missing.
inline ParseResult parse_trace(std::istream& in, const TraceFormat& format = {}) {
    if (!in) {
        throw data_error("trace source is not readable");
    }
    ParseResult result;
    std::vector<std::string> header;
    std::string line;
    bool first = true;
    std::size_t ts = 0, cpu = 0, mem = 0;
    std::optional<std::size_t> job, task;

    auto resolve_all = [&] {
        ts = detail::resolve_column(format.ts_col, header);
        cpu = detail::resolve_column(format.cpu_col, header);
        mem = detail::resolve_column(format.mem_col, header);
        job = format.job_col ? std::optional(detail::resolve_column(*format.job_col, header))
                             : std::nullopt;
        task = format.task_col ? std::optional(detail::resolve_column(*format.task_col, header))
                               : std::nullopt;
    };

    while (std::getline(in, line)) {
        if (detail::is_blank(line)) {
            continue;
        }
        auto fields = split(line, format.delimiter);
        if (first) {
            first = false;
            bool is_header = format.header == HeaderMode::Present;
            if (format.header == HeaderMode::Auto) {
                // A header row is one whose timestamp field is not an integer.
                std::size_t probe = 0;
                if (const auto* idx = std::get_if<std::size_t>(&format.ts_col)) {
                    probe = *idx;
                    is_header = probe >= fields.size() || !parse_int(fields[probe]).has_value();
                } else {
                    is_header = true;
                }
            }
            if (is_header) {
                for (auto f : fields) {
                    header.emplace_back(trim(f));
                }
                resolve_all();
                continue;
            }
            resolve_all();
        }

        ++result.rows;
        auto field = [&](std::size_t i) -> std::optional<std::string_view> {
            if (i >= fields.size()) return std::nullopt;
            return fields[i];
        };
        auto ts_text = field(ts);
        auto cpu_text = field(cpu);
        auto mem_text = field(mem);
        if (!ts_text || !cpu_text || !mem_text) {
            ++result.rejected;
            continue;
        }
        auto ts_val = parse_int(*ts_text);
        auto cpu_val = parse_double(*cpu_text);
        auto mem_val = parse_double(*mem_text);
        if (!ts_val || *ts_val < 0 || !cpu_val || !mem_val || !std::isfinite(*cpu_val) ||
            !std::isfinite(*mem_val) || *cpu_val < 0.0 || *mem_val < 0.0) {
            ++result.rejected;
            continue;
        }
        TraceEvent ev;
        ev.timestamp_us = *ts_val;
        ev.cpu_request = *cpu_val;
        ev.mem_request = *mem_val;
        if (job) {
            if (auto j = field(*job)) ev.job_id = std::string(trim(*j));
        }
        if (task) {
            if (auto t = field(*task)) ev.task_id = std::string(trim(*t));
        }
        result.events.push_back(std::move(ev));
    }
    if (in.bad()) {
        throw data_error("read error while parsing trace");
    }
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) {
                         return a.timestamp_us < b.timestamp_us;
                     });
    return result;
}

/// Extracts the per-sub-bin samples of [t_start, t_end) for one metric.
/// `events` must be sorted by timestamp. Arrivals are counted; Cpu and Memory
/// are summed per sub-bin, multiplied by `scale` and rounded to the nearest integer.
inline PeriodObservation aggregate_period(std::span<const TraceEvent> events, std::int64_t t_start,
                                          std::int64_t t_end, MetricKind metric,
                                          int sub_bin_seconds, double scale) {
    if (t_end <= t_start) {
        throw std::invalid_argument("aggregate_period: empty or inverted window");
    }
    if (sub_bin_seconds <= 0) {
        throw std::invalid_argument("aggregate_period: sub_bin_seconds must be positive");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("aggregate_period: scale must be positive");
    }
    const std::int64_t bin_us = std::int64_t{sub_bin_seconds} * kMicrosPerSecond;
    if ((t_end - t_start) % bin_us != 0) {
        throw std::invalid_argument(
            "aggregate_period: window length is not a multiple of the sub-bin width");
    }
    const auto bins = static_cast<std::size_t>((t_end - t_start) / bin_us);

    auto by_ts = [](const TraceEvent& e, std::int64_t t) { return e.timestamp_us < t; };
    auto lo = std::lower_bound(events.begin(), events.end(), t_start, by_ts);
    auto hi = std::lower_bound(lo, events.end(), t_end, by_ts);

    PeriodObservation obs;
    obs.metric = metric;
    obs.sub_bin_seconds = sub_bin_seconds;
    obs.scale = scale;
    obs.samples.assign(bins, 0);

    if (metric == MetricKind::Arrivals) {
        for (auto it = lo; it != hi; ++it) {
            ++obs.samples[static_cast<std::size_t>((it->timestamp_us - t_start) / bin_us)];
        }
        return obs;
    }
    std::vector<double> sums(bins, 0.0);
    for (auto it = lo; it != hi; ++it) {
        auto k = static_cast<std::size_t>((it->timestamp_us - t_start) / bin_us);
        sums[k] += metric == MetricKind::Cpu ? it->cpu_request : it->mem_request;
    }
    for (std::size_t k = 0; k < bins; ++k) {
        obs.samples[k] = static_cast<std::uint64_t>(std::llround(scale * sums[k]));
    }
    return obs;
}

struct AggregationConfig {
    int tp_minutes = 30;
    int pp_tps = 336;
    int sub_bin_seconds = 60;
    double scale = 100.0;
    std::int64_t start_us = 0; ///< trace offset where TP 1 of cycle 1 begins
};

inline std::int64_t tp_length_us(const AggregationConfig& cfg) {
    return std::int64_t{cfg.tp_minutes} * 60 * kMicrosPerSecond;
}

/// Number of TPs needed to cover every event at or after the start offset.
inline std::size_t covering_tp_count(std::span<const TraceEvent> events,
                                     const AggregationConfig& cfg) {
    if (events.empty() || events.back().timestamp_us < cfg.start_us) {
        return 0;
    }
    return static_cast<std::size_t>((events.back().timestamp_us - cfg.start_us) /
                                    tp_length_us(cfg)) +
           1;
}

/// Aggregates `tp_count` consecutive TPs starting at cfg.start_us into
/// observations labelled with their (TP position, cycle) coordinates.
inline std::vector<PeriodObservation> aggregate_trace(std::span<const TraceEvent> events,
                                                      const AggregationConfig& cfg,
                                                      MetricKind metric, std::size_t tp_count) {
    if (cfg.tp_minutes <= 0 || cfg.pp_tps <= 0) {
        throw std::invalid_argument("aggregate_trace: TP length and PP size must be positive");
    }
    const std::int64_t tp_us = tp_length_us(cfg);
    std::vector<PeriodObservation> out;
    out.reserve(tp_count);
    for (std::size_t i = 0; i < tp_count; ++i) {
        const std::int64_t begin = cfg.start_us + static_cast<std::int64_t>(i) * tp_us;
        auto obs = aggregate_period(events, begin, begin + tp_us, metric, cfg.sub_bin_seconds,
                                    cfg.scale);
        obs.tp_index = static_cast<int>(i % static_cast<std::size_t>(cfg.pp_tps)) + 1;
        obs.cycle_index = static_cast<int>(i / static_cast<std::size_t>(cfg.pp_tps)) + 1;
        out.push_back(std::move(obs));
    }
    return out;
}

struct HistogramBin {
    std::uint64_t lower = 0;
    std::uint64_t frequency = 0;

    friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

/// Contiguous histogram with bins aligned to multiples of `bin_width`,
/// covering [min, max] of the samples. Empty interior bins are kept.
inline std::vector<HistogramBin> build_histogram(std::span<const std::uint64_t> samples,
                                                 std::uint64_t bin_width) {
    if (samples.empty()) {
        throw std::invalid_argument("build_histogram: no samples");
    }
    if (bin_width == 0) {
        throw std::invalid_argument("build_histogram: bin width must be positive");
    }
    auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const std::uint64_t first = *mn / bin_width;
    const std::uint64_t last = *mx / bin_width;
    std::vector<HistogramBin> bins(static_cast<std::size_t>(last - first + 1));
    for (std::size_t i = 0; i < bins.size(); ++i) {
        bins[i].lower = (first + i) * bin_width;
    }
    for (auto s : samples) {
        ++bins[static_cast<std::size_t>(s / bin_width - first)].frequency;
    }
    return bins;
}

} // namespace cwl
