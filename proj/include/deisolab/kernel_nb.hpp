#pragma once

// Naive Bayes with per-class, per-feature Epanechnikov kernel density estimates.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deisolab/error.hpp"
#include "deisolab/stats.hpp"
#include "deisolab/types.hpp"
#include "deisolab/version.hpp"

namespace deisolab {

inline constexpr double kEpanechnikovConstant = 2.345;
inline constexpr double kBandwidthFloor = 1e-6;
inline constexpr double kDensityGuard = 1e-300;

inline double epanechnikov(double u) noexcept { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

/// (1 / (n h)) * sum K((x - s_i) / h)
inline double epanechnikov_density(std::span<const double> samples, double h, double x) {
    if (!(h > 0.0)) throw ConfigError("epanechnikov_density: bandwidth must be positive");
    if (samples.empty()) throw ConfigError("epanechnikov_density: no samples");
    double acc = 0.0;
    for (double s : samples) acc += epanechnikov((x - s) / h);
    return acc / (static_cast<double>(samples.size()) * h);
}

/// Same as epanechnikov_density on ascending samples, visiting only the support window.
inline double epanechnikov_density_sorted(std::span<const double> sorted, double h, double x) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - h);
    auto hi = std::upper_bound(lo, sorted.end(), x + h);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) acc += epanechnikov((x - *it) / h);
    return acc / (static_cast<double>(sorted.size()) * h);
}

struct BandwidthEstimate {
    double h = kBandwidthFloor;
    bool floored = false;
};

enum class BandwidthRule {
    Silverman, // spread = min(sd, iqr / 1.349)
    StdDev,    // spread = sd
};

inline BandwidthRule parse_bandwidth_rule(std::string_view s) {
    if (s == "silverman") return BandwidthRule::Silverman;
    if (s == "sd") return BandwidthRule::StdDev;
    throw ConfigError("bandwidth rule must be silverman|sd, got '" + std::string(s) + "'");
}

/// h = 2.345 * spread * n^(-1/5); sd alone when the IQR is zero.
inline BandwidthEstimate silverman_bandwidth(std::span<const double> samples, BandwidthRule rule = BandwidthRule::Silverman) {
    const double sd = stats::sample_sd(samples);
    double spread = sd;
    if (rule == BandwidthRule::Silverman) {
        std::vector<double> sorted(samples.begin(), samples.end());
        std::sort(sorted.begin(), sorted.end());
        const double iqr = sorted.empty() ? 0.0 : stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
        if (iqr > 0.0) spread = std::min(sd, iqr / 1.349);
    }
    const double h = kEpanechnikovConstant * spread * std::pow(static_cast<double>(samples.size()), -0.2);
    if (h > kBandwidthFloor) return {h, false};
    return {kBandwidthFloor, true};
}

enum class PriorMode { Empirical, Balanced };

struct KernelNbConfig {
    PriorMode priors = PriorMode::Empirical;
    double decision_threshold = 0.5; // Envelope iff posterior > threshold
    BandwidthRule bandwidth = BandwidthRule::Silverman;
};

struct KernelNbClass {
    std::vector<std::vector<double>> samples; // per feature, ascending
    std::vector<double> bandwidths;           // per feature
};

struct KernelNbModel {
    std::vector<std::string> features;
    std::array<double, 2> priors{0.5, 0.5};        // indexed by PairLabel
    std::array<KernelNbClass, 2> classes;           // indexed by PairLabel
    double decision_threshold = 0.5;
    std::vector<std::string> warnings;

    void validate() const {
        if (features.empty()) throw ConfigError("kernel NB: empty feature list");
        if (std::abs(priors[0] + priors[1] - 1.0) > 1e-9) throw ConfigError("kernel NB: priors must sum to 1");
        for (const auto& c : classes) {
            if (c.samples.size() != features.size() || c.bandwidths.size() != features.size()) {
                throw ConfigError("kernel NB: per-feature arrays do not match the feature list");
            }
            for (std::size_t f = 0; f < features.size(); ++f) {
                if (c.samples[f].empty()) throw ConfigError("kernel NB: class without samples");
                if (!(c.bandwidths[f] > 0.0)) throw ConfigError("kernel NB: bandwidth must be positive");
            }
        }
    }
};

/// `rows` holds one training vector per sample with columns in `feature_names` order.
inline KernelNbModel fit_kernel_nb(std::span<const std::vector<double>> rows, std::span<const PairLabel> labels,
                                   std::vector<std::string> feature_names, const KernelNbConfig& cfg = {}) {
    if (rows.size() != labels.size()) throw DataError("kernel NB: rows and labels differ in length");
    if (feature_names.empty()) throw ConfigError("kernel NB: no features selected");
    KernelNbModel model;
    model.features = std::move(feature_names);
    model.decision_threshold = cfg.decision_threshold;
    const std::size_t nf = model.features.size();
    std::array<std::size_t, 2> count{0, 0};
    for (auto l : labels) ++count[static_cast<std::size_t>(l)];
    if (count[0] == 0 || count[1] == 0) throw DataError("kernel NB: training data must contain both classes");
    const double n = static_cast<double>(labels.size());
    if (cfg.priors == PriorMode::Empirical) {
        model.priors = {static_cast<double>(count[0]) / n, static_cast<double>(count[1]) / n};
    }
    for (std::size_t c = 0; c < 2; ++c) {
        auto& cls = model.classes[c];
        cls.samples.assign(nf, {});
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (static_cast<std::size_t>(labels[r]) != c) continue;
            if (rows[r].size() != nf) throw DataError("kernel NB: row width does not match the feature list");
            for (std::size_t f = 0; f < nf; ++f) cls.samples[f].push_back(rows[r][f]);
        }
        for (std::size_t f = 0; f < nf; ++f) {
            const auto bw = silverman_bandwidth(cls.samples[f], cfg.bandwidth);
            cls.bandwidths.push_back(bw.h);
            if (bw.floored) {
                model.warnings.push_back("feature '" + model.features[f] + "' has no spread in class " +
                                         std::string(to_string(static_cast<PairLabel>(c))) + "; bandwidth floored");
            }
            std::sort(cls.samples[f].begin(), cls.samples[f].end());
        }
    }
    return model;
}

struct Prediction {
    PairLabel label = PairLabel::NonEnvelope;
    double posterior = 0.0; // P(Envelope | x)
};

/// log prior + sum of guarded log densities, per class.
inline std::array<double, 2> log_joint(const KernelNbModel& model, std::span<const double> x) {
    std::array<double, 2> lp{};
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& cls = model.classes[c];
        double acc = std::log(model.priors[c]);
        for (std::size_t f = 0; f < model.features.size(); ++f) {
            const double d = epanechnikov_density_sorted(cls.samples[f], cls.bandwidths[f], x[f]);
            acc += std::log(std::max(d, kDensityGuard));
        }
        lp[c] = acc;
    }
    return lp;
}

inline Prediction predict(const KernelNbModel& model, std::span<const double> x) {
    if (x.size() != model.features.size()) throw DataError("kernel NB: input width does not match the model");
    const auto lp = log_joint(model, x);
    // P(E) = 1 / (1 + exp(lp_nE - lp_E))
    const double diff = lp[0] - lp[1];
    const double post = diff > 0.0 ? std::exp(-diff) / (1.0 + std::exp(-diff)) : 1.0 / (1.0 + std::exp(diff));
    return {post > model.decision_threshold ? PairLabel::Envelope : PairLabel::NonEnvelope, post};
}

inline nlohmann::json model_to_json(const KernelNbModel& m) {
    nlohmann::json classes;
    for (std::size_t c = 0; c < 2; ++c) {
        classes[std::string(to_string(static_cast<PairLabel>(c)))] = {{"samples", m.classes[c].samples},
                                                                       {"bandwidths", m.classes[c].bandwidths}};
    }
    return {{"format_version", kFormatVersion},
            {"kind", "kernel_naive_bayes"},
            {"kernel", "epanechnikov"},
            {"features", m.features},
            {"priors", {{"E", m.priors[1]}, {"nE", m.priors[0]}}},
            {"decision_threshold", m.decision_threshold},
            {"classes", classes},
            {"warnings", m.warnings}};
}

inline KernelNbModel model_from_json(const nlohmann::json& j) {
    KernelNbModel m;
    try {
        if (j.value("format_version", 0) != kFormatVersion) throw ConfigError("model: unsupported format_version");
        if (j.value("kind", std::string{}) != "kernel_naive_bayes") throw ConfigError("model: not a kernel naive Bayes model");
        m.features = j.at("features").get<std::vector<std::string>>();
        m.priors = {j.at("priors").at("nE").get<double>(), j.at("priors").at("E").get<double>()};
        m.decision_threshold = j.value("decision_threshold", 0.5);
        for (std::size_t c = 0; c < 2; ++c) {
            const auto& jc = j.at("classes").at(std::string(to_string(static_cast<PairLabel>(c))));
            m.classes[c].samples = jc.at("samples").get<std::vector<std::vector<double>>>();
            m.classes[c].bandwidths = jc.at("bandwidths").get<std::vector<double>>();
            for (auto& s : m.classes[c].samples) std::sort(s.begin(), s.end());
        }
        m.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    m.validate();
    return m;
}

} // namespace deisolab
