#include "cwl/poisson.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cwl;

TEST(PoissonMle, Examples) {
    EXPECT_EQ(poisson_mle(std::vector<std::uint64_t>{2, 3, 4}).lambda, 3.0);
    EXPECT_EQ(poisson_mle(std::vector<std::uint64_t>{0, 0, 0}).lambda, 0.0);
    EXPECT_EQ(poisson_mle(std::vector<std::uint64_t>{7}).lambda, 7.0);
    EXPECT_THROW(poisson_mle(std::vector<std::uint64_t>{}), std::invalid_argument);
}

TEST(PoissonMle, MatchesIndependentMean) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 200);
    std::uniform_int_distribution<std::uint64_t> count(0, 1'000'000);
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::uint64_t> xs(len(rng));
        for (auto& x : xs) x = count(rng) >> (i % 20);
        const double got = poisson_mle(xs).lambda;
        const long double want = oracle::mean(xs);
        if (want == 0) {
            EXPECT_EQ(got, 0.0);
        } else {
            EXPECT_LE(std::abs((got - want) / want), 1e-12L);
        }
    }
}

TEST(PoissonMle, MaximisesLikelihood) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> count(0, 40);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::uint64_t> xs(1 + i % 60);
        for (auto& x : xs) x = count(rng);
        const double lam = poisson_mle(xs).lambda;
        if (lam == 0.0) continue;
        const double at = poisson_log_likelihood(xs, lam);
        EXPECT_GE(at, poisson_log_likelihood(xs, lam * 1.01));
        EXPECT_GE(at, poisson_log_likelihood(xs, lam * 0.99));
        EXPECT_NEAR(at, static_cast<double>(oracle::log_likelihood(xs, lam)),
                    1e-9 * std::max(1.0, std::abs(at)));
    }
}

TEST(PoissonPmf, Examples) {
    EXPECT_EQ(poisson_pmf(PoissonParam(0.0), 0), 1.0);
    EXPECT_EQ(poisson_pmf(PoissonParam(0.0), 3), 0.0);
    // 2^2 e^-2 / 2!, 50-digit reference
    EXPECT_NEAR(poisson_pmf(PoissonParam(2.0), 2), 0.27067056647322538, 1e-15);
    EXPECT_NEAR(poisson_pmf(PoissonParam(2.0), 2),
                static_cast<double>(oracle::pmf(oracle::big(2), 2)), 1e-15);
    EXPECT_THROW(poisson_pmf(PoissonParam(1.0), -1), std::invalid_argument);
    EXPECT_THROW(PoissonParam(-0.5), std::invalid_argument);
}

TEST(PoissonPmf, AgreesWithDirectProduct) {
    for (double lam : {0.1, 1.0, 3.5, 17.0, 80.0}) {
        for (std::int64_t k = 0; k < 150; k += 7) {
            const double want = static_cast<double>(oracle::pmf(oracle::big(lam), k));
            EXPECT_NEAR(poisson_pmf(PoissonParam(lam), k), want, 1e-12 * std::max(want, 1e-300))
                << "lambda=" << lam << " k=" << k;
        }
    }
}

TEST(PoissonPmf, StableForHugeK) {
    const double v = poisson_pmf(PoissonParam(1e6), 1'000'000);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(v, 1.0 / std::sqrt(2.0 * 3.141592653589793 * 1e6), 1e-6);
}

TEST(PoissonPmf, PartialSumsNormalise) {
    for (double lam = 0.5; lam <= 50.0; lam += 2.5) {
        const auto K = static_cast<std::int64_t>(lam + 20.0 * std::sqrt(lam) + 20.0);
        double sum = 0.0;
        for (std::int64_t k = 0; k <= K; ++k) sum += poisson_pmf(PoissonParam(lam), k);
        EXPECT_GT(sum, 1.0 - 1e-9) << lam;
    }
}

TEST(PoissonQuantile, FrozenTable) {
    struct Row {
        double lam;
        std::int64_t q50, q90, q99;
    };
    const Row table[] = {
        {0.1, 0, 0, 1}, {1, 1, 2, 4}, {2, 2, 4, 6}, {10, 10, 14, 18}, {100, 100, 113, 124},
    };
    for (const auto& r : table) {
        EXPECT_EQ(poisson_quantile(PoissonParam(r.lam), 0.5), r.q50) << r.lam;
        EXPECT_EQ(poisson_quantile(PoissonParam(r.lam), 0.9), r.q90) << r.lam;
        EXPECT_EQ(poisson_quantile(PoissonParam(r.lam), 0.99), r.q99) << r.lam;
    }
}

TEST(PoissonQuantile, MatchesHighPrecisionSummation) {
    for (double lam : {0.1, 1.0, 2.0, 10.0, 100.0}) {
        for (const char* p : {"0.5", "0.9", "0.99"}) {
            EXPECT_EQ(poisson_quantile(PoissonParam(lam), std::stod(p)),
                      oracle::quantile(oracle::big(lam), oracle::big(p)))
                << lam << " " << p;
        }
    }
}

TEST(PoissonQuantile, EdgeCases) {
    EXPECT_EQ(poisson_quantile(PoissonParam(0.0), 0.99), 0);
    EXPECT_EQ(poisson_quantile(PoissonParam(2.0), 0.9), 4);
    EXPECT_THROW(poisson_quantile(PoissonParam(1.0), 0.0), std::invalid_argument);
    EXPECT_THROW(poisson_quantile(PoissonParam(1.0), 1.0), std::invalid_argument);
}

TEST(PoissonQuantile, InvertsCdfAndIsMonotone) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lam_d(0.01, 300.0), p_d(0.001, 0.999);
    for (int i = 0; i < 300; ++i) {
        const PoissonParam lam(lam_d(rng));
        const double p = p_d(rng);
        const auto q = poisson_quantile(lam, p);
        EXPECT_GE(poisson_cdf(lam, q), p);
        if (q > 0) { EXPECT_LT(poisson_cdf(lam, q - 1), p); }
        EXPECT_LE(poisson_quantile(lam, 0.5), poisson_quantile(lam, 0.95));
    }
}

TEST(FitPeriod, FlagsIdlePeriods) {
    PeriodObservation obs;
    obs.tp_index = 4;
    obs.cycle_index = 2;
    obs.samples = {0, 0, 0};
    auto p = fit_period(obs);
    EXPECT_EQ(p.lambda, 0.0);
    EXPECT_TRUE(p.idle);
    EXPECT_EQ(p.tp_index, 4);
    EXPECT_EQ(p.cycle_index, 2);
    obs.samples = {2, 3, 4};
    EXPECT_FALSE(fit_period(obs).idle);
}
