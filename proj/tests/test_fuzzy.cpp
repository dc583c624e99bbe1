#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace deisolab;

namespace {

double gauss(double x, double c, double w) { return std::exp(-0.5 * (x - c) * (x - c) / (w * w)); }

/// Direct evaluation of the default rule base with a fine Riemann-sum
/// centroid, written without any library types.
double default_fis_oracle(double m, double s) {
    const double near_one = gauss(m, 1.003, 0.15);
    const double far = 1.0 - gauss(m, 1.003, 1.2);
    const double similar = gauss(s, 1.0, 0.5);
    const double dissimilar = 1.0 - gauss(s, 1.0, 3.0);
    const double w_high = std::min(near_one, similar);
    const double w_low = std::max(far, dissimilar);
    const int n = 200001;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < n; ++k) {
        const double y = static_cast<double>(k) / (n - 1);
        const double a = std::max(std::min(w_high, gauss(y, 1.0, 0.05)), std::min(w_low, gauss(y, 0.15, 0.25)));
        num += y * a;
        den += a;
    }
    return num / den;
}

} // namespace

TEST(Fuzzy, IdealIsotopeStepScoresHigh) {
    const double p = mamdani_possibility(1.003, 1.0, default_fis_config());
    EXPECT_GE(p, 0.95);
    EXPECT_NEAR(p, default_fis_oracle(1.003, 1.0), 1e-4);
}

TEST(Fuzzy, MatchesDenseCentroidOracle) {
    const MamdaniEngine engine(default_fis_config());
    for (double m : {0.2, 0.8, 1.0, 1.003, 1.2, 2.0, 4.1, 10.0, 86.8}) {
        for (double s : {1.0, 1.1, 1.5, 2.5, 6.0}) {
            EXPECT_NEAR(engine.possibility(m, s), default_fis_oracle(m, s), 1e-4) << "m=" << m << " s=" << s;
        }
    }
}

TEST(Fuzzy, ReferencePairOrdering) {
    // Spacing of about one dalton with similar widths is an envelope step;
    // a 4.1 Da gap is not; an 86.8 Da gap is far below.
    const MamdaniEngine engine(default_fis_config());
    const double tau = kFallbackThreshold;
    const double p1 = engine.possibility(811.7 - 810.7, 1.02);
    const double p2 = engine.possibility(809.7 - 805.6, 1.02);
    const double p3 = engine.possibility(897.6 - 810.8, 1.02);
    EXPECT_GT(p1, tau);
    EXPECT_LT(p2, tau);
    EXPECT_LT(p3, tau);
    EXPECT_LE(p3, p2);
    EXPECT_LT(p3, 0.5);
}

TEST(Fuzzy, NonIncreasingAwayFromIsotopeSpacing) {
    const MamdaniEngine engine(default_fis_config());
    for (double s : {1.0, 1.3, 2.0}) {
        double prev = engine.possibility(1.003, s);
        for (double d = 0.002; d < 11.0; d += 0.002) {
            const double p = engine.possibility(1.003 + d, s);
            EXPECT_LE(p, prev + 1e-12) << "above, d=" << d;
            prev = p;
        }
        prev = engine.possibility(1.003, s);
        for (double d = 0.002; d < 1.0; d += 0.002) {
            const double p = engine.possibility(1.003 - d, s);
            EXPECT_LE(p, prev + 1e-12) << "below, d=" << d;
            prev = p;
        }
    }
}

TEST(Fuzzy, NonIncreasingInLogRatio) {
    const MamdaniEngine engine(default_fis_config());
    for (double m : {1.003, 0.95, 1.1}) {
        double up = engine.possibility(m, 1.0), down = up;
        for (double t = 0.001; t < 3.0; t += 0.001) {
            const double pu = engine.possibility(m, std::exp(t));
            const double pd = engine.possibility(m, std::exp(-t));
            EXPECT_LE(pu, up + 1e-12);
            EXPECT_LE(pd, down + 1e-12);
            up = pu;
            down = pd;
        }
    }
}

TEST(Fuzzy, OutputStaysInUnitInterval) {
    const MamdaniEngine engine(default_fis_config());
    for (double m : {1e-6, 1e-3, 1.0, 1e3, 1e9}) {
        for (double s : {1e-6, 1.0, 1e6}) {
            const double p = engine.possibility(m, s);
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
        }
    }
}

TEST(Fuzzy, RejectsNonPositiveInputs) {
    EXPECT_THROW(mamdani_possibility(0.0, 1.0, default_fis_config()), ConfigError);
    EXPECT_THROW(mamdani_possibility(1.0, -1.0, default_fis_config()), ConfigError);
}

TEST(Fuzzy, WidthRatioIsSymmetricAndScaleFree) {
    EXPECT_DOUBLE_EQ(width_ratio(0.1, 0.2, WidthRatio::Sigma), 2.0);
    EXPECT_DOUBLE_EQ(width_ratio(0.2, 0.1, WidthRatio::Sigma), 2.0);
    EXPECT_DOUBLE_EQ(width_ratio(0.1, 0.2, WidthRatio::Variance), 4.0);
    for (double f : {0.25, 2.0, 8.0}) {
        EXPECT_DOUBLE_EQ(width_ratio(0.07 * f, 0.11 * f, WidthRatio::Variance), width_ratio(0.07, 0.11, WidthRatio::Variance));
    }
}

TEST(FuzzyConfig, ShippedFileEqualsDefault) {
    std::ifstream in(std::string(DEISOLAB_SOURCE_DIR) + "/configs/fis_default.v1.json");
    ASSERT_TRUE(in);
    EXPECT_EQ(fis_from_json(nlohmann::json::parse(in)), default_fis_config());
}

TEST(FuzzyConfig, JsonRoundTrip) {
    auto c = default_fis_config();
    c.ratio = WidthRatio::Sigma;
    c.rules.push_back({"near_one", "dissimilar", Connective::Or, "low"});
    EXPECT_EQ(fis_from_json(fis_to_json(c)), c);
}

TEST(FuzzyConfig, ValidationFailures) {
    auto c = default_fis_config();
    c.m_terms["near_one"].width = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);

    c = default_fis_config();
    c.rules.erase(c.rules.begin()); // no rule concludes "high"
    EXPECT_THROW(c.validate(), ConfigError);

    c = default_fis_config();
    c.rules.push_back({"bogus", "", Connective::And, "low"});
    EXPECT_THROW(c.validate(), ConfigError);

    auto j = fis_to_json(default_fis_config());
    j["s_ratio"] = "area";
    EXPECT_THROW(fis_from_json(j), ConfigError);
}

TEST(FuzzyConfig, OrConnectiveTakesMaximum) {
    auto c = default_fis_config();
    c.rules[0].connective = Connective::Or;
    const MamdaniEngine engine(c);
    const auto w = engine.firing(1.003, 50.0);
    EXPECT_DOUBLE_EQ(w[0], 1.0);
}
