#pragma once

// Delimited-text file formats shared by the command-line tool. Every writer
// emits a header row, comma-separated fields, shortest round-trip decimals and
// newline-terminated records. Readers skip the header row.

#include "cwl/common.hpp"
#include "cwl/evaluation.hpp"
#include "cwl/forecaster.hpp"
#include "cwl/poisson.hpp"
#include "cwl/synthetic.hpp"
#include "cwl/trace.hpp"

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace cwl::io {

namespace detail {

/// Calls fn(fields, line_no) for each non-blank row after the header.
template <class Fn>
void for_each_row(std::istream& in, std::string_view what, std::size_t min_fields, Fn&& fn) {
    if (!in) {
        throw data_error(std::string(what) + ": source is not readable");
    }
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (!header_seen) {
            header_seen = true;
            if (!parse_int(fields[0])) continue;
        }
        if (fields.size() < min_fields) {
            throw data_error(std::string(what) + ": line " + std::to_string(line_no) +
                             " has too few fields");
        }
        fn(fields, line_no);
    }
}

[[noreturn]] inline void bad_field(std::string_view what, std::size_t line_no,
                                   std::string_view field) {
    throw data_error(std::string(what) + ": line " + std::to_string(line_no) + ": bad " +
                     std::string(field));
}

inline std::int64_t int_field(std::string_view what, std::size_t line_no, std::string_view text,
                              std::string_view field) {
    auto v = parse_int(text);
    if (!v) bad_field(what, line_no, field);
    return *v;
}

inline double double_field(std::string_view what, std::size_t line_no, std::string_view text,
                           std::string_view field) {
    auto v = parse_double(text);
    if (!v) bad_field(what, line_no, field);
    return *v;
}

inline MetricKind metric_field(std::string_view what, std::size_t line_no,
                               std::string_view text) {
    auto m = parse_metric(text);
    if (!m) bad_field(what, line_no, "metric");
    return *m;
}

} // namespace detail

inline void write_trace(std::ostream& out, std::span<const TraceEvent> events) {
    out << "timestamp,job_id,task_id,cpu_request,mem_request\n";
    for (const auto& e : events) {
        out << e.timestamp_us << ',' << e.job_id << ',' << e.task_id << ','
            << format_double(e.cpu_request) << ',' << format_double(e.mem_request) << '\n';
    }
}

inline void write_truth(std::ostream& out, std::span<const double> true_lambda, int pp_tps) {
    out << "t,tp_index,true_lambda\n";
    for (std::size_t t = 0; t < true_lambda.size(); ++t) {
        out << (t + 1) << ',' << (t % static_cast<std::size_t>(pp_tps)) + 1 << ','
            << format_double(true_lambda[t]) << '\n';
    }
}

inline void write_observations(std::ostream& out, std::span<const PeriodObservation> obs) {
    out << "tp_index,cycle_index,metric,sub_bin_seconds,scale,samples\n";
    for (const auto& o : obs) {
        out << o.tp_index << ',' << o.cycle_index << ',' << to_string(o.metric) << ','
            << o.sub_bin_seconds << ',' << format_double(o.scale) << ',';
        for (std::size_t i = 0; i < o.samples.size(); ++i) {
            if (i) out << ' ';
            out << o.samples[i];
        }
        out << '\n';
    }
}

inline std::vector<PeriodObservation> read_observations(std::istream& in) {
    constexpr std::string_view what = "observations";
    std::vector<PeriodObservation> out;
    detail::for_each_row(in, what, 6, [&](const auto& f, std::size_t ln) {
        PeriodObservation o;
        o.tp_index = static_cast<int>(detail::int_field(what, ln, f[0], "tp_index"));
        o.cycle_index = static_cast<int>(detail::int_field(what, ln, f[1], "cycle_index"));
        o.metric = detail::metric_field(what, ln, f[2]);
        o.sub_bin_seconds = static_cast<int>(detail::int_field(what, ln, f[3], "sub_bin_seconds"));
        o.scale = detail::double_field(what, ln, f[4], "scale");
        for (auto tok : split(trim(f[5]), ' ')) {
            if (tok.empty()) continue;
            auto v = parse_int(tok);
            if (!v || *v < 0) detail::bad_field(what, ln, "sample");
            o.samples.push_back(static_cast<std::uint64_t>(*v));
        }
        out.push_back(std::move(o));
    });
    return out;
}

inline void write_parameters(std::ostream& out, std::span<const PeriodParameter> params) {
    out << "tp_index,cycle_index,metric,lambda,flag\n";
    for (const auto& p : params) {
        out << p.tp_index << ',' << p.cycle_index << ',' << to_string(p.metric) << ','
            << format_double(p.lambda) << ',' << (p.idle ? "idle" : "ok") << '\n';
    }
}

inline std::vector<PeriodParameter> read_parameters(std::istream& in) {
    constexpr std::string_view what = "parameters";
    std::vector<PeriodParameter> out;
    detail::for_each_row(in, what, 4, [&](const auto& f, std::size_t ln) {
        PeriodParameter p;
        p.tp_index = static_cast<int>(detail::int_field(what, ln, f[0], "tp_index"));
        p.cycle_index = static_cast<int>(detail::int_field(what, ln, f[1], "cycle_index"));
        p.metric = detail::metric_field(what, ln, f[2]);
        p.lambda = detail::double_field(what, ln, f[3], "lambda");
        if (!(p.lambda >= 0.0)) detail::bad_field(what, ln, "lambda");
        p.idle = f.size() > 4 && trim(f[4]) == "idle";
        out.push_back(p);
    });
    return out;
}

inline void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
    out << "t,tp_index,predicted_lambda,actual_lambda,fallback_used\n";
    for (const auto& r : records) {
        out << r.t << ',' << r.tp_index << ','
            << (r.predicted ? format_double(*r.predicted) : std::string("NA")) << ','
            << format_double(r.actual) << ',' << to_string(r.fallback) << '\n';
    }
}

inline std::vector<PredictionRecord> read_predictions(std::istream& in) {
    constexpr std::string_view what = "predictions";
    std::vector<PredictionRecord> out;
    detail::for_each_row(in, what, 5, [&](const auto& f, std::size_t ln) {
        PredictionRecord r;
        r.t = detail::int_field(what, ln, f[0], "t");
        r.tp_index = static_cast<int>(detail::int_field(what, ln, f[1], "tp_index"));
        if (trim(f[2]) != "NA") {
            r.predicted = detail::double_field(what, ln, f[2], "predicted_lambda");
        }
        r.actual = detail::double_field(what, ln, f[3], "actual_lambda");
        auto fb = parse_fallback(trim(f[4]));
        if (!fb) detail::bad_field(what, ln, "fallback_used");
        r.fallback = *fb;
        out.push_back(r);
    });
    return out;
}

inline void write_baselines(std::ostream& out, std::span<const BaselineRecord> records) {
    out << "t,naive,poisson_window\n";
    for (const auto& b : records) {
        out << b.t << ',' << format_double(b.naive) << ',' << format_double(b.poisson_window)
            << '\n';
    }
}

inline std::vector<BaselineRecord> read_baselines(std::istream& in) {
    constexpr std::string_view what = "baselines";
    std::vector<BaselineRecord> out;
    detail::for_each_row(in, what, 3, [&](const auto& f, std::size_t ln) {
        out.push_back({detail::int_field(what, ln, f[0], "t"),
                       detail::double_field(what, ln, f[1], "naive"),
                       detail::double_field(what, ln, f[2], "poisson_window")});
    });
    return out;
}

namespace detail {

inline const ComparatorDelta* find_comparator(const EvaluationReport& r, std::string_view name) {
    for (const auto& c : r.comparators) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

} // namespace detail

inline void write_reports(std::ostream& out, std::span<const EvaluationReport> reports) {
    out << "config_id,up_tps,bandwidth,mape,n,retained,warmup_skipped,skipped_zero_targets,"
           "insufficient_training,naive_mape,naive_improvement_pct,poisson_window_mape,"
           "poisson_window_improvement_pct\n";
    for (const auto& r : reports) {
        out << r.config_id << ',' << r.up_tps << ',' << format_double(r.bandwidth) << ','
            << format_double(r.mape) << ',' << r.n << ',' << r.errors.size() << ','
            << r.warmup_skipped << ',' << r.skipped_zero_targets << ','
            << (r.insufficient_training ? 1 : 0);
        for (auto name : {"naive", "poisson_window"}) {
            if (const auto* c = detail::find_comparator(r, name)) {
                out << ',' << format_double(c->mape) << ',' << format_double(c->improvement_pct);
            } else {
                out << ",NA,NA";
            }
        }
        out << '\n';
    }
}

/// Plot-ready table: up_tps, bandwidth, mape.
inline void write_plot(std::ostream& out, std::span<const EvaluationReport> reports) {
    out << "up_tps,bandwidth,mape\n";
    for (const auto& r : reports) {
        out << r.up_tps << ',' << format_double(r.bandwidth) << ',' << format_double(r.mape)
            << '\n';
    }
}

inline void write_errors(std::ostream& out, std::span<const EvaluationReport> reports) {
    out << "config_id,j,ape\n";
    for (const auto& r : reports) {
        for (std::size_t j = 0; j < r.errors.size(); ++j) {
            out << r.config_id << ',' << (j + 1) << ',' << format_double(r.errors[j]) << '\n';
        }
    }
}

inline void write_histogram(std::ostream& out, int tp_index, int cycle_index,
                            std::span<const HistogramBin> bins) {
    for (const auto& b : bins) {
        out << tp_index << ',' << cycle_index << ',' << b.lower << ',' << b.frequency << '\n';
    }
}

} // namespace cwl::io
