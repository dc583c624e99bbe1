#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace deisolab;

namespace {

/// Draws n values from N(mean, sd) restricted to [0, 1].
std::vector<double> draw(Rng& rng, std::size_t n, double mean, double sd) {
    std::vector<double> out;
    std::normal_distribution<double> d(mean, sd);
    while (out.size() < n) {
        const double v = d(rng);
        if (v >= 0.0 && v <= 1.0) out.push_back(v);
    }
    return out;
}

std::vector<double> concat(std::vector<std::vector<double>> parts) {
    std::vector<double> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

double npdf(double x, double m, double v) { return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * std::numbers::pi * v); }

} // namespace

TEST(Gmm, SingleComponentRecoversSampleMoments) {
    Rng rng(3);
    const auto x = draw(rng, 1000, 0.4, 0.08);
    const double m = stats::mean(x), v = stats::variance(x);
    const auto g = fit_gmm_1d(x, 1, 1);
    ASSERT_EQ(g.k(), 1u);
    const double se = std::sqrt(v / 1000.0);
    EXPECT_NEAR(g.components[0].mean, m, 3 * se);
    EXPECT_NEAR(g.components[0].variance, v, 3 * v * std::sqrt(2.0 / 999.0));
    EXPECT_NEAR(g.components[0].weight, 1.0, 1e-12);
}

TEST(Gmm, BimodalMeansMatchGridSearchOracle) {
    Rng rng(17);
    const auto x = concat({draw(rng, 200, 0.25, 0.06), draw(rng, 200, 0.75, 0.06)});
    // Profile maximum likelihood over equal-weight, equal-variance mixtures.
    double best = -1e300, bm1 = 0, bm2 = 0;
    for (double m1 = 0.10; m1 <= 0.40 + 1e-9; m1 += 0.005) {
        for (double m2 = 0.60; m2 <= 0.90 + 1e-9; m2 += 0.005) {
            for (double sd = 0.03; sd <= 0.12 + 1e-9; sd += 0.01) {
                double ll = 0.0;
                for (double v : x) ll += std::log(0.5 * npdf(v, m1, sd * sd) + 0.5 * npdf(v, m2, sd * sd));
                if (ll > best) {
                    best = ll;
                    bm1 = m1;
                    bm2 = m2;
                }
            }
        }
    }
    const auto g = fit_gmm_1d(x, 2, 1);
    ASSERT_EQ(g.k(), 2u);
    EXPECT_NEAR(g.components[0].mean, bm1, 0.05);
    EXPECT_NEAR(g.components[1].mean, bm2, 0.05);
    EXPECT_NEAR(g.components[0].mean, 0.25, 0.05);
    EXPECT_NEAR(g.components[1].mean, 0.75, 0.05);
}

TEST(Gmm, DeterministicForFixedSeed) {
    Rng rng(5);
    const auto x = concat({draw(rng, 150, 0.2, 0.05), draw(rng, 100, 0.5, 0.05), draw(rng, 150, 0.9, 0.03)});
    const auto a = fit_gmm_1d(x, 3, 9), b = fit_gmm_1d(x, 3, 9);
    ASSERT_EQ(a.k(), b.k());
    for (std::size_t k = 0; k < a.k(); ++k) {
        EXPECT_EQ(a.components[k].mean, b.components[k].mean);
        EXPECT_EQ(a.components[k].variance, b.components[k].variance);
        EXPECT_EQ(a.components[k].weight, b.components[k].weight);
    }
    EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(Gmm, PreconditionErrors) {
    std::vector<double> x(19, 0.5);
    EXPECT_THROW(fit_gmm_1d(x, 2, 1), ConfigError);
    EXPECT_THROW(fit_gmm_1d(x, 0, 1), ConfigError);
    std::vector<double> out_of_range(100, 1.5);
    EXPECT_THROW(fit_gmm_1d(out_of_range, 1, 1), ConfigError);
    EXPECT_THROW(select_k_by_bic(x, 1, 1), ConfigError);
}

TEST(Gmm, BicPicksOneForUnimodalData) {
    Rng rng(8);
    const auto x = draw(rng, 500, 0.5, 0.1);
    EXPECT_EQ(select_k_by_bic(x, 6, 1).k, 1);
}

TEST(Gmm, BicPicksFiveForFiveSeparatedComponents) {
    Rng rng(21);
    std::vector<std::vector<double>> parts;
    for (double m : {0.1, 0.3, 0.5, 0.7, 0.9}) parts.push_back(draw(rng, 200, m, 0.02));
    const auto sel = select_k_by_bic(concat(parts), 8, 1);
    EXPECT_EQ(sel.k, 5);
    ASSERT_EQ(sel.bic.size(), 8u);
}

TEST(GmmThreshold, SymmetricPairCrossesAtOneHalf) {
    Gmm1D g;
    g.components = {{0.5, 0.3, 0.01}, {0.5, 0.7, 0.01}};
    EXPECT_NEAR(threshold_from_gmm(g), 0.5, 1e-12);
}

TEST(GmmThreshold, WeightedCrossingMatchesGridSearch) {
    Gmm1D g;
    g.components = {{0.5, 0.1, 0.02}, {0.3, 0.45, 0.01}, {0.2, 0.92, 0.002}};
    const double tau = threshold_from_gmm(g);
    // Grid oracle on the two right-most components.
    double best = 0.45, best_gap = 1e300;
    for (double t = 0.45; t <= 0.92; t += 1e-5) {
        const double gap = std::abs(0.3 * npdf(t, 0.45, 0.01) - 0.2 * npdf(t, 0.92, 0.002));
        if (gap < best_gap) {
            best_gap = gap;
            best = t;
        }
    }
    EXPECT_NEAR(tau, best, 0.01);
    EXPECT_LT(std::abs(g.components[1].density(tau) - g.components[2].density(tau)), 1e-9);
}

TEST(GmmThreshold, SingleComponentFallsBack) {
    Gmm1D g;
    g.components = {{1.0, 0.5, 0.01}};
    EXPECT_THROW(threshold_from_gmm(g), NumericError);

    Rng rng(2);
    const auto x = draw(rng, 400, 0.4, 0.1);
    ThresholdOptions opt;
    opt.k_max = 4;
    const auto sel = derive_threshold(x, opt);
    EXPECT_EQ(sel.provenance, ThresholdProvenance::Fixed);
    EXPECT_DOUBLE_EQ(sel.threshold, 0.8966);
    EXPECT_FALSE(sel.note.empty());
}

TEST(GmmThreshold, DerivedThresholdSeparatesModes) {
    Rng rng(4);
    const auto x = concat({draw(rng, 900, 0.2, 0.08), draw(rng, 100, 0.97, 0.01)});
    ThresholdOptions opt;
    opt.k_max = 4;
    const auto sel = derive_threshold(x, opt);
    EXPECT_EQ(sel.provenance, ThresholdProvenance::GmmDerived);
    EXPECT_GT(sel.threshold, 0.5);
    EXPECT_LT(sel.threshold, 0.97);
}

TEST(GmmThreshold, TooFewValuesFallBack) {
    std::vector<double> x(20, 0.5);
    const auto sel = derive_threshold(x);
    EXPECT_EQ(sel.provenance, ThresholdProvenance::Fixed);
    EXPECT_DOUBLE_EQ(sel.threshold, kFallbackThreshold);
}
