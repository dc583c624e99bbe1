#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace deisolab;
using testutil::image_from;

namespace {

IonImage checkerboard(int n) {
    IonImage img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img.values[img.offset(x, y)] = (x + y) % 2;
    return img;
}

IonImage random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    IonImage img(w, h);
    for (auto& v : img.values) v = uniform(rng, 0.0, 1.0);
    return img;
}

/// Co-occurrence counts by enumerating every ordered pixel pair directly.
std::vector<double> brute_glcm(const IonImage& img, int levels, std::vector<GlcmOffset> offsets, bool symmetric) {
    std::vector<double> c(static_cast<std::size_t>(levels) * levels, 0.0);
    auto level = [&](double v) { return std::min(levels - 1, static_cast<int>(v * levels)); };
    for (int y1 = 0; y1 < img.height; ++y1)
        for (int x1 = 0; x1 < img.width; ++x1)
            for (int y2 = 0; y2 < img.height; ++y2)
                for (int x2 = 0; x2 < img.width; ++x2)
                    for (const auto& o : offsets) {
                        if (y2 - y1 != o.dy || x2 - x1 != o.dx) continue;
                        if (!img.is_valid(x1, y1) || !img.is_valid(x2, y2)) continue;
                        const int a = level(img.at(x1, y1)), b = level(img.at(x2, y2));
                        c[a * levels + b] += 1;
                        if (symmetric) c[b * levels + a] += 1;
                    }
    double t = 0;
    for (double v : c) t += v;
    for (double& v : c) v /= t;
    return c;
}

double brute_median3(const IonImage& img, int x, int y) {
    std::vector<double> v;
    for (int yy = y - 1; yy <= y + 1; ++yy)
        for (int xx = x - 1; xx <= x + 1; ++xx)
            if (xx >= 0 && yy >= 0 && xx < img.width && yy < img.height && img.is_valid(xx, yy)) v.push_back(img.at(xx, yy));
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

GlcmOptions single_offset(int levels) {
    GlcmOptions o;
    o.levels = levels;
    o.offsets = {{0, 1}};
    return o;
}

} // namespace

TEST(IonImageBuild, RowMajorPixelOrder) {
    const auto ds = testutil::dataset_from_columns(2, 2, {{1, 2, 3, 4}, {0, 0, 0, 0}}, {100, 200});
    const auto img = build_ion_image(ds, 0);
    EXPECT_EQ(img.values, (std::vector<double>{1, 2, 3, 4}));
    EXPECT_EQ(img.valid_count(), 4u);
    const auto zero = build_ion_image(ds, 1);
    EXPECT_EQ(zero.values, std::vector<double>(4, 0.0));
}

TEST(IonImageBuild, GapIsMaskedAndExcluded) {
    Dataset ds;
    ds.grid = PixelGrid(2, 2, {{0, 0}, {1, 0}, {0, 1}});
    ds.abundance = AbundanceMatrix(3, 1);
    ds.abundance.at(0, 0) = 2;
    ds.abundance.at(1, 0) = 4;
    ds.abundance.at(2, 0) = 6;
    ds.components = {{0, 100, 0.1, 1}};
    const auto img = build_ion_image(ds, 0);
    EXPECT_EQ(img.valid_count(), 3u);
    EXPECT_FALSE(img.is_valid(1, 1));
    EXPECT_DOUBLE_EQ(image_stats(img).mean, 4.0);
    EXPECT_THROW(build_ion_image(ds, 1), ConfigError);
    EXPECT_THROW(build_ion_image(ds, -1), ConfigError);
}

TEST(Enhance, ConstantImageBecomesZero) {
    const auto img = image_from(3, 3, std::vector<double>(9, 7.5));
    EXPECT_EQ(enhance(img).values, std::vector<double>(9, 0.0));
}

TEST(Enhance, EqualizationOfDistinctValuesIsRankScaled) {
    // 16 distinct values spread across the bins map to rank / (N - 1).
    std::vector<double> v(16);
    for (int k = 0; k < 16; ++k) v[k] = ((k * 7) % 16) / 15.0;
    const auto eq = equalize_histogram(image_from(4, 4, v));
    for (int k = 0; k < 16; ++k) EXPECT_NEAR(eq.values[k], ((k * 7) % 16) / 15.0, 1e-12);
}

TEST(Enhance, EqualizationIsMonotone) {
    const auto img = random_image(20, 20, 3);
    const auto eq = equalize_histogram(img);
    for (std::size_t a = 0; a < img.size(); a += 7)
        for (std::size_t b = 0; b < img.size(); b += 11)
            if (img.values[a] < img.values[b]) {
                EXPECT_LE(eq.values[a], eq.values[b]);
            }
}

TEST(Enhance, MedianRemovesSaltPixel) {
    auto img = image_from(5, 5, std::vector<double>(25, 0.2));
    img.values[img.offset(2, 2)] = 1.0;
    const auto f = median_filter3(img);
    EXPECT_EQ(f.values, std::vector<double>(25, 0.2));
}

TEST(Enhance, MedianMatchesBruteForceWithMask) {
    auto img = random_image(9, 7, 4);
    for (int k : {0, 5, 12, 30, 31, 62}) img.valid[k] = 0;
    const auto f = median_filter3(img);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (!img.is_valid(x, y)) {
                EXPECT_EQ(f.at(x, y), img.at(x, y));
                continue;
            }
            EXPECT_DOUBLE_EQ(f.at(x, y), brute_median3(img, x, y)) << x << "," << y;
        }
}

TEST(Enhance, IdempotentWithoutEqualizationOnMedianRoot) {
    // A vertical step edge is unchanged by the 3x3 median.
    std::vector<double> v(8 * 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) v[y * 8 + x] = x < 4 ? 3.0 : 11.0;
    EnhanceOptions opt;
    opt.equalize = false;
    const auto once = enhance(image_from(8, 6, v), opt);
    const auto twice = enhance(once, opt);
    for (std::size_t k = 0; k < once.size(); ++k) EXPECT_NEAR(twice.values[k], once.values[k], 1e-12);
}

TEST(Enhance, NormalizeMapsToUnitRange) {
    const auto n = normalize_min_max(random_image(10, 10, 9));
    EXPECT_DOUBLE_EQ(*std::min_element(n.values.begin(), n.values.end()), 0.0);
    EXPECT_DOUBLE_EQ(*std::max_element(n.values.begin(), n.values.end()), 1.0);
}

TEST(Differential, IdentitySymmetryAndAlgebra) {
    const auto a = random_image(6, 6, 1), b = random_image(6, 6, 2);
    EXPECT_EQ(differential_image(a, a).values, std::vector<double>(36, 0.0));
    EXPECT_EQ(differential_image(a, b), differential_image(b, a));
    IonImage inv = a;
    for (auto& v : inv.values) v = 1.0 - v;
    const auto d = differential_image(a, inv);
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(d.values[k], std::abs(2 * a.values[k] - 1), 1e-12);
}

TEST(Differential, MismatchesAreErrors) {
    EXPECT_THROW(differential_image(IonImage(2, 2), IonImage(3, 2)), DataError);
    IonImage a(2, 2), b(2, 2);
    b.valid[0] = 0;
    EXPECT_THROW(differential_image(a, b), DataError);
}

TEST(Differential, ScalarMultiplesHaveLowerContrastThanIndependentPatterns) {
    SynthConfig c;
    c.width = 32;
    c.height = 32;
    c.n_analytes = 4;
    c.n_decoys = 6;
    c.envelope_length_weights = {{2, 1.0}};
    const auto g = generate(c);
    const auto& ds = g.dataset;
    const FeatureConfig fc;
    auto contrast = [&](ComponentId i, ComponentId j) {
        const auto d = differential_image(enhance(build_ion_image(ds, i)), enhance(build_ion_image(ds, j)));
        return glcm_metrics(compute_glcm(d, fc.glcm)).contrast;
    };
    std::vector<bool> member(ds.component_count(), false);
    for (const auto& e : g.truth.envelopes)
        for (auto id : e) member[id] = true;
    std::vector<ComponentId> decoys;
    for (std::size_t k = 0; k < member.size(); ++k)
        if (!member[k]) decoys.push_back(static_cast<ComponentId>(k));
    double worst_envelope = 0.0;
    for (const auto& e : g.truth.envelopes) worst_envelope = std::max(worst_envelope, contrast(e[0], e[1]));
    std::vector<double> decoy_contrast;
    for (std::size_t a = 0; a + 1 < decoys.size(); ++a) decoy_contrast.push_back(contrast(decoys[a], decoys[a + 1]));
    EXPECT_LT(worst_envelope, stats::quantile(decoy_contrast, 0.5));
}

TEST(Glcm, ConstantImageSingleDiagonal) {
    const auto g = compute_glcm(image_from(5, 5, std::vector<double>(25, 0.4)));
    int nonzero = 0;
    for (int i = 0; i < g.levels; ++i)
        for (int j = 0; j < g.levels; ++j)
            if (g.at(i, j) > 0) {
                ++nonzero;
                EXPECT_EQ(i, j);
                EXPECT_DOUBLE_EQ(g.at(i, j), 1.0);
            }
    EXPECT_EQ(nonzero, 1);
    const auto m = glcm_metrics(g);
    EXPECT_EQ(m.contrast, 0.0);
    EXPECT_EQ(m.homogeneity, 1.0);
    EXPECT_EQ(m.energy, 1.0);
    EXPECT_EQ(m.entropy, 0.0);
    EXPECT_EQ(m.correlation, 0.0);
}

TEST(Glcm, CheckerboardMatchesEnumeration) {
    const auto img = checkerboard(4);
    const auto g = compute_glcm(img, single_offset(2));
    EXPECT_EQ(g.p, brute_glcm(img, 2, {{0, 1}}, true));
    EXPECT_DOUBLE_EQ(g.at(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(g.at(1, 0), 0.5);
    const auto m = glcm_metrics(g);
    EXPECT_DOUBLE_EQ(m.contrast, 1.0);
    EXPECT_DOUBLE_EQ(m.homogeneity, 0.5);
    EXPECT_DOUBLE_EQ(m.energy, 0.5);
    EXPECT_DOUBLE_EQ(m.entropy, 1.0);
    EXPECT_DOUBLE_EQ(m.m1, 1.0);
    EXPECT_DOUBLE_EQ(m.correlation, -1.0);
}

TEST(Glcm, RandomImagesMatchEnumerationWithMask) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto img = random_image(7, 6, seed);
        for (std::size_t k = seed; k < img.size(); k += 5) img.valid[k] = 0;
        for (bool sym : {true, false}) {
            GlcmOptions o;
            o.symmetric = sym;
            const auto g = compute_glcm(img, o);
            const auto expect = brute_glcm(img, 8, o.offsets, sym);
            for (std::size_t k = 0; k < expect.size(); ++k) EXPECT_NEAR(g.p[k], expect[k], 1e-15);
        }
    }
}

TEST(Glcm, MaskedPixelsNeverContribute) {
    // The masked pixel holds a value in a level no valid pixel uses.
    auto img = image_from(3, 3, std::vector<double>(9, 0.1));
    img.values[4] = 0.95;
    img.valid[4] = 0;
    const auto g = compute_glcm(img);
    EXPECT_DOUBLE_EQ(g.at(0, 0), 1.0);
}

TEST(Glcm, InvariantsOnRandomImages) {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
        const auto img = random_image(12, 9, seed);
        for (int levels : {2, 8, 16}) {
            GlcmOptions o;
            o.levels = levels;
            const auto g = compute_glcm(img, o);
            double sum = 0;
            for (double v : g.p) sum += v;
            EXPECT_NEAR(sum, 1.0, 1e-9);
            for (int i = 0; i < levels; ++i)
                for (int j = 0; j < levels; ++j) EXPECT_EQ(g.at(i, j), g.at(j, i));
            const auto m = glcm_metrics(g);
            EXPECT_GT(m.energy, 0.0);
            EXPECT_LE(m.energy, 1.0);
            EXPECT_GT(m.homogeneity, 0.0);
            EXPECT_LE(m.homogeneity, 1.0);
            EXPECT_LE(m.entropy, std::log2(static_cast<double>(levels * levels)) + 1e-12);
        }
    }
}

TEST(Glcm, ImageRangeQuantizationUsesMinMax) {
    auto img = image_from(2, 2, {10, 20, 10, 20});
    GlcmOptions o = single_offset(2);
    o.range = QuantRange::Image;
    const auto g = compute_glcm(img, o);
    EXPECT_DOUBLE_EQ(g.at(0, 1), 0.5);
}

TEST(Glcm, TooFewPairsAndBadOptions) {
    IonImage one(1, 1);
    EXPECT_THROW(compute_glcm(one), DataError);
    GlcmOptions o;
    o.levels = 1;
    EXPECT_THROW(compute_glcm(IonImage(3, 3), o), ConfigError);
    o = {};
    o.offsets = {{0, 0}};
    EXPECT_THROW(compute_glcm(IonImage(3, 3), o), ConfigError);
}

TEST(ImageStats, OneToNine) {
    const auto s = image_stats(image_from(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
    EXPECT_DOUBLE_EQ(s.mean, 5.0);
    EXPECT_DOUBLE_EQ(s.median, 5.0);
    EXPECT_NEAR(s.variance, 20.0 / 3.0, 1e-12);
    EXPECT_NEAR(s.moment, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(s.iqr, 7.0 - 3.0);
}

TEST(ImageStats, ConstantImage) {
    const auto s = image_stats(image_from(2, 2, {3, 3, 3, 3}));
    EXPECT_EQ(s.std, 0.0);
    EXPECT_EQ(s.cv, 0.0);
    EXPECT_EQ(s.iqr, 0.0);
}

TEST(ImageStats, ZerosAndTen) {
    const auto s = image_stats(image_from(2, 2, {0, 0, 0, 10}));
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.std, std::sqrt(18.75), 1e-12);
    EXPECT_NEAR(s.cv, std::sqrt(18.75) / 2.5, 1e-12);
    // Third central moment by hand: (3 * (-2.5)^3 + 7.5^3) / 4.
    EXPECT_NEAR(s.moment, (3 * std::pow(-2.5, 3) + std::pow(7.5, 3)) / 4, 1e-12);
    EXPECT_DOUBLE_EQ(s.median, 0.0);
    EXPECT_DOUBLE_EQ(s.iqr, 2.5);
}

TEST(ImageStats, ZeroMeanGivesZeroCvAndEmptyIsError) {
    EXPECT_EQ(image_stats(image_from(2, 1, {0, 0})).cv, 0.0);
    IonImage empty(2, 2);
    std::fill(empty.valid.begin(), empty.valid.end(), 0);
    EXPECT_THROW(image_stats(empty), DataError);
}

TEST(CrossCorrelation, IdentityNegationIndependence) {
    const auto a = random_image(100, 100, 7);
    EXPECT_NEAR(cross_correlation(a, a), 1.0, 1e-12);
    IonImage neg = a;
    for (auto& v : neg.values) v = 3.0 - v;
    EXPECT_NEAR(cross_correlation(a, neg), -1.0, 1e-12);
    EXPECT_LT(std::abs(cross_correlation(a, random_image(100, 100, 8))), 0.05);
    EXPECT_EQ(cross_correlation(a, image_from(100, 100, std::vector<double>(10000, 1.0))), 0.0);
}

TEST(Autocorrelation, ConstantRampCheckerboard) {
    EXPECT_EQ(autocorrelation(image_from(4, 4, std::vector<double>(16, 2.0))), 0.0);
    std::vector<double> ramp(10 * 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) ramp[y * 10 + x] = x + 0.1 * y;
    EXPECT_GT(autocorrelation(image_from(10, 10, ramp)), 0.99);
    EXPECT_NEAR(autocorrelation(checkerboard(4)), -1.0, 1e-12);
    EXPECT_THROW(autocorrelation(IonImage(1, 2)), DataError);
}

TEST(Features, NamesAndDefaultSubset) {
    EXPECT_EQ(kFeatureNames.size(), 17u);
    EXPECT_EQ(default_selected_features(),
              (std::vector<std::string>{"m", "s", "correlation", "entropy", "median", "contrast", "homogeneity", "moment"}));
    EXPECT_EQ(feature_index("M1"), 4u);
    EXPECT_THROW(feature_index("texture"), ConfigError);
}

TEST(Features, DuplicateComponentIsTheFlatSignature) {
    std::vector<float> col(64);
    Rng rng(3);
    for (auto& v : col) v = static_cast<float>(uniform(rng, 0.0, 50.0));
    const auto ds = testutil::dataset_from_columns(8, 8, {col, col}, {500.0, 501.003});
    const PeakPair pair{0, 1, 1.003, 1.0, std::nullopt};
    const auto f = feature_vector(pair, ds);
    EXPECT_EQ(f.get("contrast"), 0.0);
    EXPECT_EQ(f.get("entropy"), 0.0);
    EXPECT_EQ(f.get("median"), 0.0);
    EXPECT_NEAR(f.get("correlation"), 1.0, 1e-12);
    EXPECT_EQ(f.get("m"), 1.003);
}

TEST(Features, NoiseFreeEnvelopePairMatchesDuplicateCase) {
    SynthConfig c;
    c.width = 24;
    c.height = 24;
    c.n_analytes = 5;
    c.n_decoys = 0;
    c.noise_sigma = 0.0;
    const auto g = generate(c);
    for (const auto& env : g.truth.envelopes) {
        const auto& cs = g.dataset.components;
        const PeakPair pair{env[0], env[1], cs[env[1]].mu - cs[env[0]].mu, 1.0, std::nullopt};
        const auto f = feature_vector(pair, g.dataset);
        EXPECT_LT(f.get("contrast"), 1e-2);
        EXPECT_EQ(f.get("median"), 0.0);
        EXPECT_GT(f.get("correlation"), 0.999);
    }
}

TEST(Features, InvariantUnderCommonPositiveRescale) {
    Rng rng(12);
    std::vector<float> a(100), b(100);
    for (auto& v : a) v = static_cast<float>(uniform(rng, 0.0, 10.0));
    for (auto& v : b) v = static_cast<float>(uniform(rng, 0.0, 10.0));
    const PeakPair pair{0, 1, 1.0, 1.2, std::nullopt};
    const auto base = feature_vector(pair, testutil::dataset_from_columns(10, 10, {a, b}, {100, 101}));
    for (float f : {0.125f, 4.0f, 1024.0f}) {
        auto sa = a, sb = b;
        for (auto& v : sa) v *= f;
        for (auto& v : sb) v *= f;
        EXPECT_EQ(feature_vector(pair, testutil::dataset_from_columns(10, 10, {sa, sb}, {100, 101})), base);
    }
}

TEST(Features, ExtractionIsThreadIndependentAndMatchesSingleCalls) {
    SynthConfig c;
    c.width = 16;
    c.height = 16;
    c.n_analytes = 4;
    c.n_decoys = 12;
    const auto g = generate(c);
    const auto pairs = candidate_pairs(g.dataset, 10.0, 5);
    const auto one = extract_features(g.dataset, pairs, {}, 1);
    const auto many = extract_features(g.dataset, pairs, {}, 8);
    EXPECT_EQ(one, many);
    for (std::size_t k = 0; k < pairs.size(); k += 9) EXPECT_EQ(one[k], feature_vector(pairs[k], g.dataset));
}

TEST(Spearman, DuplicateNegationAndConstant) {
    std::vector<FeatureVector> v(6);
    Rng rng(2);
    for (auto& f : v) {
        for (auto& x : f.values) x = uniform(rng, 0, 1);
        f[feature_index("std")] = f[feature_index("mean")];
        f[feature_index("iqr")] = -f[feature_index("mean")];
        f[feature_index("cv")] = 4.0;
    }
    const auto r = spearman_matrix(v);
    const auto mean = feature_index("mean"), sd = feature_index("std"), iqr = feature_index("iqr"), cv = feature_index("cv");
    EXPECT_NEAR(r.matrix[mean][sd], 1.0, 1e-12);
    EXPECT_NEAR(r.matrix[mean][iqr], -1.0, 1e-12);
    EXPECT_EQ(r.matrix[cv][mean], 0.0);
    EXPECT_EQ(r.matrix[cv][cv], 1.0);
    ASSERT_EQ(r.warnings.size(), 1u);
    for (std::size_t a = 0; a < kFeatureCount; ++a)
        for (std::size_t b = 0; b < kFeatureCount; ++b) EXPECT_EQ(r.matrix[a][b], r.matrix[b][a]);
    v.resize(2);
    EXPECT_THROW(spearman_matrix(v), DataError);
}

TEST(Spearman, MatchesRankFormulaWithoutTies) {
    // Without ties Spearman equals 1 - 6 sum d^2 / (n (n^2 - 1)).
    std::vector<FeatureVector> v(9);
    const int ra[] = {1, 5, 3, 9, 2, 8, 4, 7, 6}, rb[] = {2, 4, 1, 8, 3, 9, 6, 5, 7};
    for (int k = 0; k < 9; ++k) {
        v[k][0] = ra[k] * 0.37;
        v[k][1] = std::exp(rb[k]);
    }
    double d2 = 0;
    for (int k = 0; k < 9; ++k) d2 += (ra[k] - rb[k]) * (ra[k] - rb[k]);
    EXPECT_NEAR(spearman_matrix(v).matrix[0][1], 1 - 6 * d2 / (9.0 * 80.0), 1e-12);
}
