#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace deisolab;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.width = 16;
    c.height = 12;
    c.n_analytes = 6;
    c.n_decoys = 20;
    return c;
}

/// Expected 13C count of an averagine peptide, computed from composition.
double averagine_lambda(double mass) {
    const double residues = mass / 111.1254;
    const double carbons = residues * 4.9384;
    return carbons * 0.0107;
}

} // namespace

TEST(PoissonEnvelope, SpacingIsOneIsotopeStep) {
    const auto env = poisson_envelope(1000.0, 1, 3);
    ASSERT_EQ(env.size(), 3u);
    EXPECT_NEAR(env[1].mu - env[0].mu, 1.003, 1e-9);
    EXPECT_NEAR(env[2].mu - env[1].mu, 1.003, 1e-9);
}

TEST(PoissonEnvelope, ChargeDividesSpacing) {
    const auto env = poisson_envelope(1000.0, 2, 2);
    EXPECT_NEAR(env[1].mu - env[0].mu, 1.003 / 2, 1e-9);
}

TEST(PoissonEnvelope, RatioMatchesAveragineOracle) {
    const auto env = poisson_envelope(1000.0, 1, 2);
    EXPECT_NEAR(env[1].intensity / env[0].intensity, averagine_lambda(1000.0), 1e-12);
}

TEST(PoissonEnvelope, SmallMassIsMonoisotopicDominated) {
    const auto env = poisson_envelope(50.0, 1, 3);
    EXPECT_DOUBLE_EQ(env[0].intensity, 1.0);
    EXPECT_LT(env[1].intensity, 0.03);
    EXPECT_LT(env[2].intensity, env[1].intensity);
}

TEST(PoissonEnvelope, MaxIsOneAndShapeIsPoisson) {
    const double mass = 3500.0;
    const auto env = poisson_envelope(mass, 1, 6);
    const double lambda = averagine_lambda(mass);
    double peak = 0.0;
    for (const auto& p : env) peak = std::max(peak, p.intensity);
    EXPECT_DOUBLE_EQ(peak, 1.0);
    for (std::size_t k = 1; k < env.size(); ++k) {
        EXPECT_NEAR(env[k].intensity / env[k - 1].intensity, lambda / static_cast<double>(k), 1e-9);
    }
}

TEST(PoissonEnvelope, RejectsBadArguments) {
    EXPECT_THROW(poisson_envelope(0.0, 1, 2), ConfigError);
    EXPECT_THROW(poisson_envelope(-5.0, 1, 2), ConfigError);
    EXPECT_THROW(poisson_envelope(100.0, 0, 2), ConfigError);
    EXPECT_THROW(poisson_envelope(100.0, 1, 0), ConfigError);
}

TEST(Generate, ZeroAnalytesFiveDecoys) {
    auto c = small_config();
    c.n_analytes = 0;
    c.n_decoys = 5;
    const auto g = generate(c);
    EXPECT_EQ(g.truth.envelopes.size(), 0u);
    EXPECT_EQ(g.dataset.component_count(), 5u);
}

TEST(Generate, SameSeedGivesIdenticalBytes) {
    const auto c = small_config();
    testutil::TempDir a("gen_a"), b("gen_b");
    save_dataset(generate(c).dataset, a.str());
    save_dataset(generate(c, 4).dataset, b.str());
    for (const char* f : {"components.csv", "grid.csv", "abundance.bin", "annotations.csv", "manifest.json"}) {
        std::ifstream fa(a.str(f), std::ios::binary), fb(b.str(f), std::ios::binary);
        const std::string sa{std::istreambuf_iterator<char>(fa), {}}, sb{std::istreambuf_iterator<char>(fb), {}};
        EXPECT_EQ(sa, sb) << f;
    }
}

TEST(Generate, DifferentSeedsDiffer) {
    auto c = small_config();
    const auto a = generate(c);
    c.seed = 2;
    EXPECT_NE(generate(c).dataset, a.dataset);
}

TEST(Generate, ComponentsCoverEnvelopesAndDecoys) {
    const auto c = small_config();
    const auto g = generate(c);
    std::size_t members = 0;
    for (const auto& e : g.truth.envelopes) {
        EXPECT_GE(e.size(), 2u);
        members += e.size();
    }
    EXPECT_EQ(g.truth.envelopes.size(), 6u);
    EXPECT_EQ(g.dataset.component_count(), members + 20);
    ASSERT_TRUE(g.dataset.annotations);
    EXPECT_EQ(*g.dataset.annotations, g.truth.envelopes);
}

TEST(Generate, NComponentsFixesTheTotal) {
    auto c = small_config();
    c.n_components = 60;
    EXPECT_EQ(generate(c).dataset.component_count(), 60u);
    c.n_components = 3;
    EXPECT_THROW(generate(c), ConfigError);
}

TEST(Generate, AdjacentSpacingWithoutJitterIsExact) {
    auto c = small_config();
    c.mu_jitter = 0.0;
    const auto g = generate(c);
    for (const auto& env : g.truth.envelopes) {
        for (std::size_t k = 1; k < env.size(); ++k) {
            const double d = g.dataset.components[env[k]].mu - g.dataset.components[env[k - 1]].mu;
            EXPECT_NEAR(d, 1.003, 1e-9);
        }
    }
}

TEST(Generate, AdjacentSpacingWithJitterIsBounded) {
    auto c = small_config();
    c.mu_jitter = 0.01;
    c.seed = 11;
    const auto g = generate(c);
    for (const auto& env : g.truth.envelopes) {
        for (std::size_t k = 1; k < env.size(); ++k) {
            const double d = g.dataset.components[env[k]].mu - g.dataset.components[env[k - 1]].mu;
            EXPECT_LE(std::abs(d - 1.003), 2 * c.mu_jitter + 1e-12);
        }
    }
}

TEST(Generate, MembersAreScalarMultiplesWithoutNoise) {
    auto c = small_config();
    c.noise_sigma = 0.0;
    c.seed = 5;
    const auto g = generate(c);
    const auto& ab = g.dataset.abundance;
    for (const auto& env : g.truth.envelopes) {
        const float* a = ab.column(env[0]);
        for (std::size_t k = 1; k < env.size(); ++k) {
            const float* b = ab.column(env[k]);
            double ratio = -1.0;
            for (std::size_t p = 0; p < ab.rows(); ++p) {
                EXPECT_EQ(a[p] == 0.0f, b[p] == 0.0f);
                if (a[p] <= 0.0f) continue;
                const double r = static_cast<double>(b[p]) / a[p];
                if (ratio < 0) ratio = r;
                EXPECT_NEAR(r / ratio, 1.0, 1e-5);
            }
            EXPECT_GT(ratio, 0.0);
        }
    }
}

TEST(Generate, RelativeIntensityFollowsPoissonWithoutNoise) {
    auto c = small_config();
    c.noise_sigma = 0.0;
    c.mu_jitter = 0.0;
    const auto g = generate(c);
    const auto& ds = g.dataset;
    for (const auto& env : g.truth.envelopes) {
        const auto ideal = poisson_envelope(ds.components[env[0]].mu, 1, static_cast<int>(env.size()));
        double s0 = 0, s1 = 0;
        for (std::size_t p = 0; p < ds.abundance.rows(); ++p) {
            s0 += ds.abundance.at(p, env[0]);
            s1 += ds.abundance.at(p, env[1]);
        }
        EXPECT_NEAR(s1 / s0, ideal[1].intensity / ideal[0].intensity, 1e-4);
    }
}

TEST(Generate, FullOverlapInterleavesTwoAnalytes) {
    auto c = small_config();
    c.n_analytes = 2;
    c.n_decoys = 0;
    c.overlap_fraction = 1.0;
    c.envelope_length_weights = {{3, 1.0}};
    c.mu_jitter = 0.0;
    const auto g = generate(c);
    ASSERT_EQ(g.truth.envelopes.size(), 2u);
    // Components sorted by mu alternate between the two envelopes, all
    // within a window of length-1 isotope steps plus the offset.
    std::vector<int> owner(g.dataset.component_count(), -1);
    for (int e = 0; e < 2; ++e)
        for (auto id : g.truth.envelopes[e]) owner[id] = e;
    ASSERT_EQ(owner.size(), 6u);
    for (std::size_t k = 1; k < owner.size(); ++k) EXPECT_NE(owner[k], owner[k - 1]);
    EXPECT_LT(g.dataset.components.back().mu - g.dataset.components.front().mu, 3 * 1.003);
}

TEST(Generate, EllipseOutlineLeavesGaps) {
    auto c = small_config();
    c.outline = "ellipse";
    const auto g = generate(c);
    EXPECT_LT(g.dataset.grid.size(), static_cast<std::size_t>(c.width * c.height));
    EXPECT_EQ(g.dataset.grid.index_at(0, 0), -1);
}

TEST(Generate, NarrowMassRangeIsAnError) {
    auto c = small_config();
    c.mass_min = 1000.0;
    c.mass_max = 1000.5;
    EXPECT_THROW(generate(c), ConfigError);
}

TEST(SynthConfigJson, RoundTripAndUnknownKey) {
    auto c = small_config();
    c.envelope_length_weights = {{2, 1.0}, {4, 3.0}};
    c.overlap_fraction = 0.25;
    const nlohmann::json j = c;
    const auto back = j.get<SynthConfig>();
    EXPECT_EQ(nlohmann::json(back), j);

    auto bad = j;
    bad["colour"] = 3;
    EXPECT_THROW(bad.get<SynthConfig>(), ConfigError);

    bad = j;
    bad["noise_sigma"] = -1.0;
    EXPECT_THROW(bad.get<SynthConfig>(), ConfigError);
}

TEST(SynthConfigJson, ShippedConfigsParse) {
    for (const char* f : {"synth_small.v1.json", "synth_large.v1.json"}) {
        std::ifstream in(std::string(DEISOLAB_SOURCE_DIR) + "/configs/" + f);
        ASSERT_TRUE(in) << f;
        EXPECT_NO_THROW(nlohmann::json::parse(in).get<SynthConfig>()) << f;
    }
}

TEST(GroundTruth, JsonRoundTrip) {
    const auto g = generate(small_config());
    EXPECT_EQ(ground_truth_from_json(ground_truth_json(g.truth)), g.truth);
    EXPECT_THROW(ground_truth_from_json(nlohmann::json::object()), DataError);
}
