#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deisolab/glcm.hpp"
#include "deisolab/image_stats.hpp"
#include "deisolab/ion_image.hpp"
#include "deisolab/parallel.hpp"
#include "deisolab/preselect.hpp"
#include "deisolab/stats.hpp"
#include "deisolab/types.hpp"

namespace deisolab {

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr std::size_t kFeatureCount = 17;

/// Fixed descriptor order. "correlation" is the Pearson correlation of the two
/// separate enhanced images; "glcm_correlation" is the Haralick correlation of
/// the differential image.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "m",    "s",   "contrast", "homogeneity", "M1",  "entropy", "energy",      "glcm_correlation", "mean",
    "std",  "variance", "moment", "median",   "iqr", "cv",      "correlation", "autocorrelation"};

/// Selected subset shipped as the classifier default.
inline std::vector<std::string> default_selected_features() {
    return {"m", "s", "correlation", "entropy", "median", "contrast", "homogeneity", "moment"};
}

inline std::size_t feature_index(std::string_view name) {
    for (std::size_t k = 0; k < kFeatureNames.size(); ++k) {
        if (kFeatureNames[k] == name) return k;
    }
    throw ConfigError("unknown feature '" + std::string(name) + "'");
}

inline std::vector<std::size_t> feature_indices(std::span<const std::string> names) {
    std::vector<std::size_t> out;
    for (const auto& n : names) out.push_back(feature_index(n));
    return out;
}

struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    double operator[](std::size_t k) const noexcept { return values[k]; }
    double& operator[](std::size_t k) noexcept { return values[k]; }
    double get(std::string_view name) const { return values[feature_index(name)]; }
    bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
    EnhanceOptions enhance;
    GlcmOptions glcm;
    double entropy_base = 2.0;
    int autocorr_dy = 0;
    int autocorr_dx = 1;
};

/// Descriptors of a pair given its two already enhanced images.
inline FeatureVector features_from_images(const PeakPair& pair, const IonImage& ea, const IonImage& eb,
                                          const FeatureConfig& cfg) {
    const auto diff = differential_image(ea, eb);
    const auto g = glcm_metrics(compute_glcm(diff, cfg.glcm), cfg.entropy_base);
    const auto st = image_stats(diff);
    FeatureVector f;
    f.values = {pair.m,     pair.s,      g.contrast,  g.homogeneity, g.m1,     g.entropy,
                g.energy,   g.correlation, st.mean,   st.std,        st.variance, st.moment,
                st.median,  st.iqr,      st.cv,       cross_correlation(ea, eb),
                autocorrelation(diff, cfg.autocorr_dy, cfg.autocorr_dx)};
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        if (!std::isfinite(f.values[k])) {
            throw NumericError("feature '" + std::string(kFeatureNames[k]) + "' is not finite for pair (" +
                               std::to_string(pair.i) + "," + std::to_string(pair.j) + ")");
        }
    }
    return f;
}

inline FeatureVector feature_vector(const PeakPair& pair, const Dataset& ds, const FeatureConfig& cfg = {}) {
    const auto ea = enhance(build_ion_image(ds, pair.i), cfg.enhance);
    const auto eb = enhance(build_ion_image(ds, pair.j), cfg.enhance);
    return features_from_images(pair, ea, eb, cfg);
}

/// Enhanced image of every component referenced by `pairs`, keyed by id.
inline std::map<ComponentId, IonImage> enhanced_images(const Dataset& ds, std::span<const PeakPair> pairs,
                                                       const EnhanceOptions& opt, unsigned threads = 1) {
    std::vector<ComponentId> ids;
    for (const auto& p : pairs) {
        ids.push_back(p.i);
        ids.push_back(p.j);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<IonImage> imgs(ids.size());
    parallel_for(ids.size(), threads, [&](std::size_t k) { imgs[k] = enhance(build_ion_image(ds, ids[k]), opt); });
    std::map<ComponentId, IonImage> out;
    for (std::size_t k = 0; k < ids.size(); ++k) out.emplace(ids[k], std::move(imgs[k]));
    return out;
}

/// One vector per pair, in input order. Each component is enhanced once.
inline std::vector<FeatureVector> extract_features(const Dataset& ds, std::span<const PeakPair> pairs,
                                                   const FeatureConfig& cfg = {}, unsigned threads = 1) {
    const auto cache = enhanced_images(ds, pairs, cfg.enhance, threads);
    std::vector<FeatureVector> out(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t k) {
        out[k] = features_from_images(pairs[k], cache.at(pairs[k].i), cache.at(pairs[k].j), cfg);
    });
    return out;
}

/// Rows restricted to the given feature columns.
inline std::vector<std::vector<double>> project(std::span<const FeatureVector> vectors,
                                                std::span<const std::size_t> columns) {
    std::vector<std::vector<double>> rows(vectors.size());
    for (std::size_t r = 0; r < vectors.size(); ++r) {
        rows[r].reserve(columns.size());
        for (auto c : columns) rows[r].push_back(vectors[r][c]);
    }
    return rows;
}

struct SpearmanResult {
    std::vector<std::vector<double>> matrix; // kFeatureCount x kFeatureCount
    std::vector<std::string> warnings;
};

/// Spearman rank correlation between all descriptor pairs (average ranks for
/// ties). A constant descriptor correlates 0 with everything but itself.
inline SpearmanResult spearman_matrix(std::span<const FeatureVector> vectors) {
    if (vectors.size() < 3) throw DataError("spearman_matrix: need at least 3 feature vectors");
    std::vector<std::vector<double>> ranks(kFeatureCount);
    std::vector<bool> flat(kFeatureCount, false);
    SpearmanResult out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        std::vector<double> col(vectors.size());
        for (std::size_t r = 0; r < vectors.size(); ++r) col[r] = vectors[r][f];
        flat[f] = std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
        if (flat[f]) out.warnings.push_back("feature '" + std::string(kFeatureNames[f]) + "' is constant");
        ranks[f] = stats::average_ranks(col);
    }
    out.matrix.assign(kFeatureCount, std::vector<double>(kFeatureCount, 0.0));
    for (std::size_t a = 0; a < kFeatureCount; ++a) {
        out.matrix[a][a] = 1.0;
        for (std::size_t b = a + 1; b < kFeatureCount; ++b) {
            const double r = flat[a] || flat[b] ? 0.0 : stats::pearson(ranks[a], ranks[b]);
            out.matrix[a][b] = out.matrix[b][a] = r;
        }
    }
    return out;
}

} // namespace deisolab
