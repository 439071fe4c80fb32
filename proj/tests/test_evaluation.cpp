#include "cwl/evaluation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cwl;

namespace {

std::vector<PeriodParameter> periodic_stream(int m, int cycles, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.3, 0.3);
    std::vector<PeriodParameter> out;
    for (int c = 1; c <= cycles; ++c) {
        for (int pos = 1; pos <= m; ++pos) {
            PeriodParameter p;
            p.tp_index = pos;
            p.cycle_index = c;
            p.lambda = 10.0 + 4.0 * std::sin(2.0 * 3.141592653589793 * pos / m) + noise(rng);
            out.push_back(p);
        }
    }
    return out;
}

} // namespace

TEST(Mape, Examples) {
    const std::vector<double> p{110, 90}, t{100, 100};
    EXPECT_NEAR(mape(p, t).mape, 0.1, 1e-15);
    EXPECT_EQ(mape(t, t).mape, 0.0);
    const std::vector<double> p2{1, 2, 3}, t2{2, 0, 3};
    const auto r = mape(p2, t2);
    EXPECT_EQ(r.skipped_zero_targets, 1u);
    EXPECT_EQ(r.retained, 2u);
    EXPECT_DOUBLE_EQ(r.mape, 0.25);
    EXPECT_EQ(r.errors, (std::vector<double>{0.5, 0.0}));
}

TEST(Mape, Errors) {
    EXPECT_THROW(mape(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
    EXPECT_THROW(mape(std::vector<double>{1, 2}, std::vector<double>{0, 0}), std::invalid_argument);
}

TEST(Mape, Properties) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> v(0, 100), scale(0.001, 1000);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> p(1 + i % 30), t(p.size());
        for (std::size_t j = 0; j < p.size(); ++j) {
            p[j] = v(rng);
            t[j] = j % 5 == 4 ? 0.0 : v(rng) + 0.1;
        }
        t[0] = 1.0;
        const double c = scale(rng);
        std::vector<double> cp(p), ct(t);
        for (auto& x : cp) x *= c;
        for (auto& x : ct) x *= c;
        const auto r = mape(p, t);
        EXPECT_NEAR(mape(cp, ct).mape, r.mape, 1e-12 * std::max(1.0, r.mape));
        EXPECT_EQ(r.retained + r.skipped_zero_targets, p.size());
        double sum = 0.0;
        for (double e : r.errors) sum += e;
        EXPECT_DOUBLE_EQ(r.mape, sum / static_cast<double>(r.retained));
        EXPECT_EQ(mape(t, t).mape, 0.0);
        if (r.mape == 0.0) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (t[j] != 0.0) { EXPECT_EQ(p[j], t[j]); }
            }
        }
    }
}

TEST(Compare, Examples) {
    EXPECT_NEAR(compare(0.4, 0.5), 20.0, 1e-12);
    EXPECT_EQ(compare(0.3, 0.3), 0.0);
    EXPECT_NEAR(compare(0.864 * 0.7, 0.7), 13.6, 1e-12);
    EXPECT_LT(compare(0.6, 0.5), 0.0);
    EXPECT_THROW(compare(0.1, 0.0), std::invalid_argument);
}

TEST(EvaluateRecords, WarmupAndPerfectRecords) {
    std::vector<PredictionRecord> recs(4);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        recs[i].t = static_cast<long long>(i + 1);
        recs[i].actual = 2.0 + static_cast<double>(i);
        if (i > 0) recs[i].predicted = recs[i].actual;
    }
    const auto rep = evaluate_records(recs);
    EXPECT_EQ(rep.mape, 0.0);
    EXPECT_EQ(rep.n, 4u);
    EXPECT_EQ(rep.warmup_skipped, 1u);
    EXPECT_EQ(rep.errors.size() + rep.warmup_skipped + rep.skipped_zero_targets, rep.n);

    std::vector<PredictionRecord> only_warmup(2);
    EXPECT_TRUE(std::isnan(evaluate_records(only_warmup).mape));
}

TEST(EvaluateRecords, BaselineComparators) {
    std::vector<PredictionRecord> recs(3);
    std::vector<BaselineRecord> base;
    for (std::size_t i = 0; i < 3; ++i) {
        recs[i].t = static_cast<long long>(i + 10);
        recs[i].actual = 10.0;
        recs[i].predicted = 9.0;
        base.push_back({recs[i].t, 8.0, 12.5});
    }
    const auto rep = evaluate_records(recs, base);
    ASSERT_EQ(rep.comparators.size(), 2u);
    EXPECT_EQ(rep.comparators[0].name, "naive");
    EXPECT_NEAR(rep.comparators[0].mape, 0.2, 1e-15);
    EXPECT_NEAR(rep.comparators[0].improvement_pct, 50.0, 1e-12);
    EXPECT_EQ(rep.comparators[1].name, "poisson_window");
    EXPECT_NEAR(rep.comparators[1].improvement_pct, 60.0, 1e-12);
    base.pop_back();
    EXPECT_THROW(evaluate_records(recs, base), data_error);
}

TEST(ComputeBaselines, UsesPriorActualsOnly) {
    std::vector<PredictionRecord> recs(5);
    for (std::size_t i = 0; i < 5; ++i) {
        recs[i].t = static_cast<long long>(i + 1);
        recs[i].actual = static_cast<double>(i + 1);
    }
    const auto b = compute_baselines(recs, 2, 3);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0].t, 3);
    EXPECT_EQ(b[0].naive, 2.0);
    EXPECT_EQ(b[2].naive, 4.0);
    EXPECT_EQ(compute_baselines(recs, 0, 3).size(), 4u);
}

TEST(ConfigId, Format) {
    ForecastConfig cfg;
    EXPECT_EQ(config_id(cfg), "up=50;k=20;kernel=epanechnikov;l=2");
    cfg.kernel = {KernelFamily::Gaussian, FixedRadius{2.5}};
    cfg.up_tps = 6;
    EXPECT_EQ(config_id(cfg), "up=6;h=2.5;kernel=gaussian;l=2");
}

TEST(Sweep, GridOfNineSortedAndThreadIndependent) {
    const int m = 48;
    const auto stream = periodic_stream(m, 3, 3);
    const std::span<const PeriodParameter> all(stream);
    const auto train = all.first(2 * m), test = all.subspan(2 * m);
    std::vector<ForecastConfig> grid;
    for (int up : {24, 3, 12}) {
        for (int k : {8, 4, 16}) {
            ForecastConfig c;
            c.pp_tps = m;
            c.up_tps = up;
            c.kernel.bandwidth = KNearest{k};
            grid.push_back(c);
        }
    }
    const auto serial = sweep(grid, train, test);
    ASSERT_EQ(serial.size(), 9u);
    for (std::size_t i = 1; i < serial.size(); ++i) {
        EXPECT_LE(std::pair(serial[i - 1].up_tps, serial[i - 1].bandwidth),
                  std::pair(serial[i].up_tps, serial[i].bandwidth));
    }
    for (const auto& r : serial) {
        EXPECT_TRUE(std::isfinite(r.mape));
        EXPECT_FALSE(r.insufficient_training);
        EXPECT_EQ(r.n, static_cast<std::size_t>(m));
        EXPECT_EQ(r.comparators.size(), 2u);
    }
    SweepOptions par;
    par.jobs = 4;
    const auto threaded = sweep(grid, train, test, par);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(threaded[i].config_id, serial[i].config_id);
        EXPECT_EQ(threaded[i].mape, serial[i].mape);
        EXPECT_EQ(threaded[i].errors, serial[i].errors);
    }
}

TEST(Sweep, FlagsShortTraining) {
    const int m = 12;
    const auto stream = periodic_stream(m, 2, 4);
    const std::span<const PeriodParameter> all(stream);
    ForecastConfig c;
    c.pp_tps = m;
    c.up_tps = 4;
    c.kernel.bandwidth = KNearest{3};
    const std::vector<ForecastConfig> grid{c};
    const auto reps = sweep(grid, all.first(m), all.subspan(m));
    ASSERT_EQ(reps.size(), 1u);
    EXPECT_TRUE(reps[0].insufficient_training);
    EXPECT_THROW(sweep(grid, all, std::span<const PeriodParameter>{}), std::invalid_argument);
}

TEST(Sweep, PropagatesWorkerErrors) {
    const int m = 12;
    const auto stream = periodic_stream(m, 2, 4);
    const std::span<const PeriodParameter> all(stream);
    ForecastConfig c;
    c.pp_tps = m;
    c.up_tps = 40;
    const std::vector<ForecastConfig> grid{c, c};
    SweepOptions par;
    par.jobs = 2;
    EXPECT_THROW(sweep(grid, all.first(m), all.subspan(m), par), std::invalid_argument);
}
