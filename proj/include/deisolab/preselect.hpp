#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deisolab/fuzzy.hpp"
#include "deisolab/gmm.hpp"
#include "deisolab/parallel.hpp"
#include "deisolab/types.hpp"

namespace deisolab {

struct PeakPair {
    ComponentId i = 0;
    ComponentId j = 0;
    double m = 0.0; // mu_j - mu_i [Da]
    double s = 1.0; // width ratio, >= 1
    std::optional<double> possibility;

    PairKey key() const noexcept { return {i, j}; }
    bool operator==(const PeakPair&) const = default;
};

/// All pairs i < j with mu_j - mu_i <= window_da (window_da <= 0 disables the
/// window), keeping at most k_neighbors right-neighbours of each i
/// (k_neighbors == 0 disables the cap). Ordered by i, then j.
inline std::vector<PeakPair> candidate_pairs(const Dataset& ds, double window_da, int k_neighbors,
                                             WidthRatio ratio = WidthRatio::Variance) {
    const bool use_window = window_da > 0.0;
    const bool use_cap = k_neighbors >= 1;
    if (!use_window && !use_cap) throw ConfigError("candidate_pairs: enable the m/z window or the neighbour cap");
    if (k_neighbors < 0) throw ConfigError("candidate_pairs: k_neighbors must be >= 0");
    std::vector<PeakPair> pairs;
    const auto& c = ds.components;
    for (std::size_t i = 0; i < c.size(); ++i) {
        int taken = 0;
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            const double m = c[j].mu - c[i].mu;
            if (use_window && m > window_da) break;
            if (use_cap && taken >= k_neighbors) break;
            pairs.push_back({static_cast<ComponentId>(i), static_cast<ComponentId>(j), m,
                             width_ratio(c[i].sigma, c[j].sigma, ratio), std::nullopt});
            ++taken;
        }
    }
    return pairs;
}

/// Fills `possibility` of every pair; output order is the input order.
inline void score_pairs(std::span<PeakPair> pairs, const MamdaniEngine& engine, unsigned threads = 1) {
    parallel_for(pairs.size(), threads, [&](std::size_t k) { pairs[k].possibility = engine.possibility(pairs[k].m, pairs[k].s); });
}

enum class ThresholdProvenance { GmmDerived, Fixed };

inline std::string_view to_string(ThresholdProvenance p) noexcept {
    return p == ThresholdProvenance::GmmDerived ? "gmm-derived" : "fixed";
}

struct PreselectModel {
    FISConfig fis;
    double threshold = kFallbackThreshold;
    ThresholdProvenance provenance = ThresholdProvenance::Fixed;

    void validate() const {
        if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("preselect: threshold must lie in (0, 1)");
    }
};

struct ThresholdSelection {
    double threshold = kFallbackThreshold;
    ThresholdProvenance provenance = ThresholdProvenance::Fixed;
    int k = 0;                // mixture size used, 0 when falling back
    std::vector<double> bic;  // BIC per K
    std::string note;         // reason for a fallback
};

struct ThresholdOptions {
    int k_max = 8;
    double elbow_fraction = 0.1;
    std::uint64_t seed = 1;
    GmmOptions gmm;
};

/// Data-driven threshold: choose K by the BIC elbow, fit, and take the crossing
/// of the two right-most components. Falls back to the fixed threshold when
/// the mixture offers no usable crossing.
inline ThresholdSelection derive_threshold(std::span<const double> possibilities, const ThresholdOptions& opt = {}) {
    ThresholdSelection out;
    try {
        if (possibilities.size() < 10 * static_cast<std::size_t>(opt.k_max)) {
            throw NumericError("too few pairs for a mixture fit");
        }
        auto sel = select_k_by_bic(possibilities, opt.k_max, opt.seed, opt.elbow_fraction, opt.gmm);
        out.bic = sel.bic;
        out.k = sel.k;
        auto model = fit_gmm_1d(possibilities, sel.k, opt.seed, opt.gmm);
        const double tau = threshold_from_gmm(model);
        if (!(tau > 0.0 && tau < 1.0)) throw NumericError("mixture crossing outside (0, 1)");
        out.threshold = tau;
        out.provenance = ThresholdProvenance::GmmDerived;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numeric && e.kind() != ErrorKind::Config) throw;
        out.threshold = kFallbackThreshold;
        out.provenance = ThresholdProvenance::Fixed;
        out.note = e.what();
    }
    return out;
}

struct ReductionReport {
    std::size_t input_pairs = 0;
    std::size_t retained_pairs = 0;

    double reduction_percent() const noexcept {
        if (input_pairs == 0) return 0.0;
        return 100.0 * (1.0 - static_cast<double>(retained_pairs) / static_cast<double>(input_pairs));
    }
};

struct PreselectResult {
    std::vector<PeakPair> retained;
    std::vector<bool> kept; // per input pair
    ReductionReport report;
};

/// Keeps pairs whose possibility reaches the model threshold.
inline PreselectResult preselect(std::span<const PeakPair> pairs, const PreselectModel& model) {
    model.validate();
    PreselectResult out;
    out.kept.resize(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!pairs[k].possibility) throw ConfigError("preselect: pair possibility has not been computed");
        const bool keep = *pairs[k].possibility >= model.threshold;
        out.kept[k] = keep;
        if (keep) out.retained.push_back(pairs[k]);
    }
    out.report = {pairs.size(), out.retained.size()};
    return out;
}

} // namespace deisolab
