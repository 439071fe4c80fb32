// cwl: command-line driver for ingestion, fitting, forecasting, evaluation and
// synthetic trace generation. Every command writes a JSON run manifest next to
// its outputs.
//
// Exit status: 0 success, 2 usage/configuration error, 3 data or I/O error.

#include "cwl/cwl.hpp"
#include "cwl/digest.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#ifndef CWL_VERSION
#define CWL_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SharedOptions {
    int tp_minutes = 30;
    int pp_tps = 336;
    int up_tps = 50;
    int cycles = 2;
    std::string kernel = "epanechnikov";
    int bandwidth_k = 20;
    double bandwidth_h = 0.0;
    std::string metric = "arrivals";
    int sub_bin_seconds = 60;
    double scale = 100.0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    unsigned jobs = 1;
    int baseline_window = cwl::kDefaultBaselineWindow;
};

cwl::ForecastConfig make_config(const SharedOptions& o, cwl::MetricKind metric) {
    cwl::ForecastConfig cfg;
    cfg.tp_minutes = o.tp_minutes;
    cfg.pp_tps = o.pp_tps;
    cfg.up_tps = o.up_tps;
    cfg.cycles = o.cycles;
    auto family = cwl::parse_kernel(o.kernel);
    if (!family) throw usage_error("unknown kernel '" + o.kernel + "'");
    cfg.kernel.family = *family;
    if (o.bandwidth_h > 0.0) {
        cfg.kernel.bandwidth = cwl::FixedRadius{o.bandwidth_h};
    } else {
        cfg.kernel.bandwidth = cwl::KNearest{o.bandwidth_k};
    }
    cfg.metric = metric;
    cfg.sub_bin_seconds = o.sub_bin_seconds;
    cfg.scale = o.scale;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw usage_error(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

std::vector<cwl::MetricKind> selected_metrics(const std::string& name) {
    if (name == "all") {
        return {std::begin(cwl::kAllMetrics), std::end(cwl::kAllMetrics)};
    }
    auto m = cwl::parse_metric(name);
    if (!m) throw usage_error("unknown metric '" + name + "'");
    return {*m};
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cwl::data_error("cannot open input file " + path);
    return in;
}

/// Effective settings as key=value lines, restricted to the root options and
/// the active subcommand, so the text can be fed back through --config.
std::string config_echo(const CLI::App& app, const std::string& command) {
    std::istringstream all(app.config_to_str(true, false));
    std::string out, line;
    while (std::getline(all, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.ends_with("=\"\"")) continue;
        const auto key = line.substr(0, eq);
        const auto dot = key.find('.');
        if (dot != std::string::npos && key.substr(0, dot) != command) continue;
        if (key == "out-dir") continue;
        out += line + '\n';
    }
    return out;
}

/// Collects outputs and inputs for the run manifest.
class Run {
public:
    Run(std::string command, const SharedOptions& opts) : command_(std::move(command)), opts_(opts) {
        fs::create_directories(opts.out_dir);
    }

    std::string output_path(const std::string& name) {
        outputs_.push_back(name);
        return (fs::path(opts_.out_dir) / name).string();
    }

    void input(const std::string& path) { inputs_[path] = cwl::sha256_file(path); }

    void write(const std::string& text, const std::string& name) {
        std::ofstream out(output_path(name), std::ios::binary);
        out << text;
        if (!out) throw cwl::data_error("cannot write " + name);
    }

    void note(const std::string& key, json value) { extra_[key] = std::move(value); }

    void finish(const CLI::App& app) {
        json m;
        m["command"] = command_;
        m["tool_version"] = CWL_VERSION;
        m["seed"] = opts_.seed;
        m["config_echo"] = config_echo(app, command_);
        json inputs = json::array();
        for (const auto& [path, digest] : inputs_) {
            inputs.push_back({{"path", path}, {"sha256", digest}});
        }
        m["inputs"] = inputs;
        m["outputs"] = outputs_;
        for (const auto& [k, v] : extra_) m[k] = v;
        std::ofstream out((fs::path(opts_.out_dir) / ("manifest_" + command_ + ".json")).string(),
                          std::ios::binary);
        out << m.dump(2) << '\n';
    }

private:
    std::string command_;
    const SharedOptions& opts_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    std::map<std::string, json> extra_;
};

cwl::ColumnRef column_ref(const std::string& text, const char* flag) {
    if (text.empty()) throw usage_error(std::string(flag) + ": empty column");
    if (auto idx = cwl::parse_int(text)) {
        if (*idx < 0) throw usage_error(std::string(flag) + ": negative column index");
        return static_cast<std::size_t>(*idx);
    }
    return text;
}

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

std::vector<cwl::PeriodParameter> read_parameter_files(const std::vector<std::string>& paths,
                                                       Run& run) {
    std::vector<cwl::PeriodParameter> out;
    for (const auto& p : paths) {
        auto in = open_input(p);
        run.input(p);
        auto part = cwl::io::read_parameters(in);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

cwl::MetricKind stream_metric(const std::vector<cwl::PeriodParameter>& a,
                              const std::vector<cwl::PeriodParameter>& b) {
    std::optional<cwl::MetricKind> m;
    for (const auto* s : {&a, &b}) {
        for (const auto& p : *s) {
            if (m && *m != p.metric) throw cwl::data_error("parameter streams mix metrics");
            m = p.metric;
        }
    }
    return m.value_or(cwl::MetricKind::Arrivals);
}

// ---------------------------------------------------------------------------

struct SynthOptions {
    std::size_t tps = 0;
    double base_lambda = 10.0;
    double daily_amp = 0.2;
    double weekly_amp = 0.3;
    double noise_sigma = 0.0;
    std::int64_t start_us = 0;
};

void cmd_synth(const SharedOptions& o, const SynthOptions& s, const CLI::App& app) {
    cwl::SyntheticSpec spec;
    spec.pp_tps = o.pp_tps;
    spec.tps = s.tps ? s.tps : 3 * static_cast<std::size_t>(o.pp_tps);
    spec.base_lambda = s.base_lambda;
    spec.daily_amp = s.daily_amp;
    spec.weekly_amp = s.weekly_amp;
    spec.noise_sigma = s.noise_sigma;
    spec.seed = o.seed;
    spec.tp_minutes = o.tp_minutes;
    spec.sub_bin_seconds = o.sub_bin_seconds;
    spec.start_us = s.start_us;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw usage_error(e.what());
    }
    const auto trace = cwl::generate(spec);
    Run run("synth", o);
    run.write(render([&](auto& os) { cwl::io::write_trace(os, trace.events); }), "trace.csv");
    run.write(render([&](auto& os) { cwl::io::write_truth(os, trace.true_lambda, spec.pp_tps); }),
              "truth.csv");
    run.note("rng", std::string(cwl::kSyntheticRng));
    run.note("events", trace.events.size());
    run.finish(app);
}

struct IngestOptions {
    std::string trace;
    std::string col_ts = "0";
    std::string col_job = "1";
    std::string col_task = "2";
    std::string col_cpu = "3";
    std::string col_mem = "4";
    char delimiter = ',';
    std::string header = "auto";
    std::int64_t start_us = 0;
    std::size_t tps = 0;
};

void cmd_ingest(const SharedOptions& o, const IngestOptions& io, const CLI::App& app) {
    cwl::TraceFormat fmt;
    fmt.delimiter = io.delimiter;
    fmt.ts_col = column_ref(io.col_ts, "--col-ts");
    fmt.cpu_col = column_ref(io.col_cpu, "--col-cpu");
    fmt.mem_col = column_ref(io.col_mem, "--col-mem");
    fmt.job_col = io.col_job == "none" ? std::nullopt
                                       : std::optional(column_ref(io.col_job, "--col-job"));
    fmt.task_col = io.col_task == "none" ? std::nullopt
                                         : std::optional(column_ref(io.col_task, "--col-task"));
    if (io.header == "auto") fmt.header = cwl::HeaderMode::Auto;
    else if (io.header == "yes") fmt.header = cwl::HeaderMode::Present;
    else if (io.header == "no") fmt.header = cwl::HeaderMode::Absent;
    else throw usage_error("--header must be auto, yes or no");

    const auto metrics = selected_metrics(o.metric);
    const auto cfg = make_config(o, metrics.front());

    Run run("ingest", o);
    auto in = open_input(io.trace);
    run.input(io.trace);
    const auto parsed = cwl::parse_trace(in, fmt);
    auto agg = cfg.aggregation(io.start_us);
    const std::size_t tps = io.tps ? io.tps : cwl::covering_tp_count(parsed.events, agg);
    for (auto metric : metrics) {
        const auto obs = cwl::aggregate_trace(parsed.events, agg, metric, tps);
        run.write(render([&](auto& os) { cwl::io::write_observations(os, obs); }),
                  "observations_" + std::string(cwl::to_string(metric)) + ".csv");
    }
    run.note("rows", parsed.rows);
    run.note("rejected_rows", parsed.rejected);
    run.note("tps", tps);
    run.finish(app);
    std::cerr << "ingest: " << parsed.rows << " rows, " << parsed.rejected << " rejected, " << tps
              << " target periods\n";
}

struct FitOptions {
    std::vector<std::string> observations;
    std::uint64_t hist_bin = 0;
};

void cmd_fit(const SharedOptions& o, const FitOptions& f, const CLI::App& app) {
    Run run("fit", o);
    std::map<cwl::MetricKind, std::vector<cwl::PeriodObservation>> by_metric;
    for (const auto& path : f.observations) {
        auto in = open_input(path);
        run.input(path);
        for (auto& obs : cwl::io::read_observations(in)) {
            by_metric[obs.metric].push_back(std::move(obs));
        }
    }
    std::size_t idle = 0;
    for (const auto& [metric, obs] : by_metric) {
        std::vector<cwl::PeriodParameter> params;
        params.reserve(obs.size());
        for (const auto& ob : obs) {
            if (ob.samples.empty()) {
                throw cwl::data_error("observation (" + std::to_string(ob.cycle_index) + "," +
                                      std::to_string(ob.tp_index) + ") has no samples");
            }
            params.push_back(cwl::fit_period(ob));
            idle += params.back().idle;
        }
        const std::string name(cwl::to_string(metric));
        run.write(render([&](auto& os) { cwl::io::write_parameters(os, params); }),
                  "lambda_" + name + ".csv");
        if (f.hist_bin > 0) {
            run.write(render([&](auto& os) {
                          os << "tp_index,cycle_index,bin_lower,frequency\n";
                          for (const auto& ob : obs) {
                              cwl::io::write_histogram(os, ob.tp_index, ob.cycle_index,
                                                       cwl::build_histogram(ob.samples, f.hist_bin));
                          }
                      }),
                      "histograms_" + name + ".csv");
        }
    }
    run.note("idle_periods", idle);
    run.finish(app);
}

struct PredictOptions {
    std::vector<std::string> train;
    std::vector<std::string> test;
};

void cmd_predict(const SharedOptions& o, const PredictOptions& p, const CLI::App& app) {
    Run run("predict", o);
    const auto train = read_parameter_files(p.train, run);
    const auto test = read_parameter_files(p.test, run);
    if (test.empty()) throw cwl::data_error("test stream is empty");
    const auto cfg = make_config(o, stream_metric(train, test));

    std::vector<cwl::PeriodParameter> stream(train);
    stream.insert(stream.end(), test.begin(), test.end());
    cwl::CyclicWindowForecaster forecaster(cfg);
    std::vector<cwl::PredictionRecord> records;
    records.reserve(stream.size());
    for (const auto& param : stream) {
        records.push_back(forecaster.step(param));
    }
    const std::span<const cwl::PredictionRecord> all(records);
    const auto test_records = all.subspan(train.size());
    const auto baselines = cwl::compute_baselines(all, train.size(), o.baseline_window);

    run.write(render([&](auto& os) { cwl::io::write_predictions(os, test_records); }),
              "predictions.csv");
    run.write(render([&](auto& os) { cwl::io::write_baselines(os, baselines); }), "baselines.csv");
    run.write(cwl::snapshot(forecaster.dataset()), "store.snap");
    run.note("train_tps", train.size());
    run.note("test_tps", test.size());
    run.finish(app);
}

struct EvaluateOptions {
    std::string records;
    std::string baselines;
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<int> grid_up;
    std::vector<int> grid_k;
    std::vector<double> grid_h;
    bool baseline = false;
};

void cmd_evaluate(const SharedOptions& o, const EvaluateOptions& e, const CLI::App& app) {
    Run run("evaluate", o);
    std::vector<cwl::EvaluationReport> reports;
    if (!e.records.empty()) {
        auto in = open_input(e.records);
        run.input(e.records);
        const auto records = cwl::io::read_predictions(in);
        std::vector<cwl::BaselineRecord> baselines;
        if (!e.baselines.empty()) {
            auto bin = open_input(e.baselines);
            run.input(e.baselines);
            baselines = cwl::io::read_baselines(bin);
        } else if (e.baseline) {
            throw usage_error("--baseline with --records needs --baselines FILE");
        }
        auto rep = cwl::evaluate_records(records, baselines);
        rep.config_id = "records";
        rep.up_tps = o.up_tps;
        rep.bandwidth = o.bandwidth_h > 0.0 ? o.bandwidth_h : o.bandwidth_k;
        reports.push_back(std::move(rep));
    } else {
        if (e.train.empty() || e.test.empty()) {
            throw usage_error("evaluate needs --records, or --train and --test for a sweep");
        }
        const auto train = read_parameter_files(e.train, run);
        const auto test = read_parameter_files(e.test, run);
        const auto base = make_config(o, stream_metric(train, test));
        if (!e.grid_k.empty() && !e.grid_h.empty()) {
            throw usage_error("--grid-k and --grid-h are mutually exclusive");
        }
        std::vector<cwl::BandwidthMode> bandwidths;
        for (int k : e.grid_k) bandwidths.emplace_back(cwl::KNearest{k});
        for (double h : e.grid_h) bandwidths.emplace_back(cwl::FixedRadius{h});
        if (bandwidths.empty()) bandwidths.push_back(base.kernel.bandwidth);
        std::vector<int> ups = e.grid_up.empty() ? std::vector<int>{base.up_tps} : e.grid_up;
        std::vector<cwl::ForecastConfig> grid;
        for (int up : ups) {
            for (const auto& bw : bandwidths) {
                auto cfg = base;
                cfg.up_tps = up;
                cfg.kernel.bandwidth = bw;
                try {
                    cfg.validate();
                } catch (const std::invalid_argument& ex) {
                    throw usage_error(std::string("invalid grid point: ") + ex.what());
                }
                grid.push_back(cfg);
            }
        }
        cwl::SweepOptions sopts;
        sopts.baselines = e.baseline;
        sopts.baseline_window = o.baseline_window;
        sopts.jobs = o.jobs;
        reports = cwl::sweep(grid, train, test, sopts);
    }
    run.write(render([&](auto& os) { cwl::io::write_reports(os, reports); }), "report.csv");
    run.write(render([&](auto& os) { cwl::io::write_plot(os, reports); }), "plot.csv");
    run.write(render([&](auto& os) { cwl::io::write_errors(os, reports); }), "errors.csv");
    run.finish(app);
    for (const auto& r : reports) {
        std::cout << r.config_id << " mape=" << cwl::format_double(r.mape);
        for (const auto& c : r.comparators) {
            std::cout << ' ' << c.name << "_improvement_pct=" << cwl::format_double(c.improvement_pct);
        }
        std::cout << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cyclic window workload forecasting: Poisson MLE per target period, "
                 "local linear regression over cyclic utilization windows"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", CWL_VERSION);
    app.set_config("--config", "", "key=value configuration file (flags override it)");

    SharedOptions o;
    app.add_option("--tp-min", o.tp_minutes, "Target period length in minutes")->capture_default_str();
    app.add_option("--pp-tps", o.pp_tps, "Target periods per pattern period (m)")->capture_default_str();
    app.add_option("--up-tps", o.up_tps, "Target periods per utilization window (n)")->capture_default_str();
    app.add_option("--cycles", o.cycles, "Pattern periods kept in the store (l)")->capture_default_str();
    app.add_option("--kernel", o.kernel, "Kernel family")
        ->check(CLI::IsMember({"epanechnikov", "biweight", "gaussian"}))
        ->capture_default_str();
    app.add_option("--bandwidth-k", o.bandwidth_k, "Nearest-neighbour bandwidth")->capture_default_str();
    app.add_option("--bandwidth-h", o.bandwidth_h, "Fixed-radius bandwidth; when > 0 it replaces k")
        ->capture_default_str();
    app.add_option("--metric", o.metric, "Metric to process")
        ->check(CLI::IsMember({"arrivals", "cpu", "memory", "mem", "all"}))
        ->capture_default_str();
    app.add_option("--sub-bin-sec", o.sub_bin_seconds, "Sub-bin width inside a TP, seconds")
        ->capture_default_str();
    app.add_option("--scale", o.scale, "Multiplier applied to CPU/memory sums before rounding")
        ->capture_default_str();
    app.add_option("--seed", o.seed, "Seed for synthetic generation")->capture_default_str();
    app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", o.jobs, "Parallel sweep workers")->capture_default_str();
    app.add_option("--baseline-window", o.baseline_window, "Poisson moving-window baseline size")
        ->capture_default_str();

    SynthOptions so;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cyclic Poisson trace");
    synth->add_option("--tps", so.tps, "Number of target periods (default 3 pattern periods)");
    synth->add_option("--base-lambda", so.base_lambda, "Mean count per sub-bin")->capture_default_str();
    synth->add_option("--daily-amp", so.daily_amp, "Daily modulation amplitude in [0,1)")
        ->capture_default_str();
    synth->add_option("--weekly-amp", so.weekly_amp, "Weekly modulation amplitude in [0,1)")
        ->capture_default_str();
    synth->add_option("--noise-sigma", so.noise_sigma, "Lognormal noise per TP")->capture_default_str();
    synth->add_option("--start-us", so.start_us, "Timestamp of the first TP")->capture_default_str();

    IngestOptions io;
    auto* ingest = app.add_subcommand("ingest", "Aggregate a trace into per-TP observations");
    ingest->add_option("trace", io.trace, "Delimited trace file")->required();
    ingest->add_option("--col-ts", io.col_ts, "Timestamp column (index or header name)")->capture_default_str();
    ingest->add_option("--col-cpu", io.col_cpu, "CPU request column")->capture_default_str();
    ingest->add_option("--col-mem", io.col_mem, "Memory request column")->capture_default_str();
    ingest->add_option("--col-job", io.col_job, "Job id column or 'none'")->capture_default_str();
    ingest->add_option("--col-task", io.col_task, "Task id column or 'none'")->capture_default_str();
    ingest->add_option("--delimiter", io.delimiter, "Field delimiter")->capture_default_str();
    ingest->add_option("--header", io.header, "auto | yes | no")->capture_default_str();
    ingest->add_option("--start-us", io.start_us, "Trace offset of TP 1")->capture_default_str();
    ingest->add_option("--tps", io.tps, "Number of TPs (default: cover all events)");

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "Poisson MLE per target period");
    fit->add_option("observations", fo.observations, "Observation files")->required();
    fit->add_option("--hist-bin", fo.hist_bin, "Also write per-TP histograms with this bin width");

    PredictOptions po;
    auto* predict = app.add_subcommand("predict", "Run the cyclic window forecaster");
    predict->add_option("--train", po.train, "Fitted lambda files for training")->required();
    predict->add_option("--test", po.test, "Fitted lambda files for testing")->required();

    EvaluateOptions eo;
    auto* evaluate = app.add_subcommand("evaluate", "MAPE reports and UP/bandwidth sweeps");
    evaluate->add_option("--records", eo.records, "Prediction records to score");
    evaluate->add_option("--baselines", eo.baselines, "Baseline predictions for --records");
    evaluate->add_option("--train", eo.train, "Training lambda files (sweep mode)");
    evaluate->add_option("--test", eo.test, "Test lambda files (sweep mode)");
    evaluate->add_option("--grid-up", eo.grid_up, "UP sizes to sweep")->delimiter(',');
    evaluate->add_option("--grid-k", eo.grid_k, "Neighbour bandwidths to sweep")->delimiter(',');
    evaluate->add_option("--grid-h", eo.grid_h, "Radius bandwidths to sweep")->delimiter(',');
    evaluate->add_flag("--baseline", eo.baseline, "Include baseline comparator deltas");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth) cmd_synth(o, so, app);
        else if (*ingest) cmd_ingest(o, io, app);
        else if (*fit) cmd_fit(o, fo, app);
        else if (*predict) cmd_predict(o, po, app);
        else if (*evaluate) cmd_evaluate(o, eo, app);
    } catch (const usage_error& e) {
        std::cerr << "cwl: " << e.what() << '\n';
        return kExitUsage;
    } catch (const cwl::data_error& e) {
        std::cerr << "cwl: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "cwl: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
