#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "deisolab/features.hpp"
#include "deisolab/kernel_nb.hpp"
#include "deisolab/preselect.hpp"
#include "deisolab/version.hpp"

namespace deisolab {

struct ClassifiedPair {
    PeakPair pair;
    PairLabel label = PairLabel::NonEnvelope;
    double posterior = 0.0;
    bool preselect_rejected = false;
};

/// Predicts from precomputed descriptors; `features` must align with `pairs`.
inline std::vector<ClassifiedPair> predict_pairs(std::span<const PeakPair> pairs, std::span<const FeatureVector> features,
                                                 const KernelNbModel& model, unsigned threads = 1) {
    if (pairs.size() != features.size()) throw DataError("predict_pairs: pairs and features differ in length");
    const auto cols = feature_indices(model.features);
    std::vector<ClassifiedPair> out(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t k) {
        std::vector<double> x;
        x.reserve(cols.size());
        for (auto c : cols) x.push_back(features[k][c]);
        const auto p = predict(model, x);
        out[k] = {pairs[k], p.label, p.posterior, false};
    });
    return out;
}

/// One result per input pair, in input order. Pairs below the preselection
/// threshold are NonEnvelope with posterior 0 and never reach feature extraction.
inline std::vector<ClassifiedPair> classify_pairs(const Dataset& ds, std::span<const PeakPair> pairs,
                                                  const KernelNbModel& model, const PreselectModel& pre,
                                                  const FeatureConfig& fcfg = {}, unsigned threads = 1) {
    model.validate();
    const auto sel = preselect(pairs, pre);
    const auto feats = extract_features(ds, sel.retained, fcfg, threads);
    const auto predicted = predict_pairs(sel.retained, feats, model, threads);
    std::vector<ClassifiedPair> out;
    out.reserve(pairs.size());
    std::size_t r = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (sel.kept[k]) {
            out.push_back(predicted[r++]);
        } else {
            out.push_back({pairs[k], PairLabel::NonEnvelope, 0.0, true});
        }
    }
    return out;
}

struct EnvelopeSet {
    std::vector<Envelope> envelopes;            // members ordered by mu, sorted by first member
    std::map<std::size_t, std::size_t> histogram; // length -> count
};

inline constexpr double kAssemblyTolerance = 0.25;

/// Chains Envelope-labelled pairs whose spacing is one isotope step (within
/// `tol`). Each component gets at most one successor and one predecessor;
/// links are taken in order of decreasing posterior, so competing links
/// resolve towards the more confident one.
inline EnvelopeSet assemble_envelopes(std::span<const ClassifiedPair> classified, double tol = kAssemblyTolerance) {
    if (!(tol > 0.0)) throw ConfigError("assemble_envelopes: tolerance must be positive");
    std::vector<const ClassifiedPair*> links;
    for (const auto& c : classified) {
        if (c.label == PairLabel::Envelope && std::abs(c.pair.m - kIsotopeSpacing) <= tol) links.push_back(&c);
    }
    std::stable_sort(links.begin(), links.end(), [](auto* a, auto* b) {
        if (a->posterior != b->posterior) return a->posterior > b->posterior;
        return a->pair.key() < b->pair.key();
    });
    std::map<ComponentId, ComponentId> next, prev;
    for (const auto* l : links) {
        const auto [i, j] = l->pair.key();
        if (next.contains(i) || prev.contains(j)) continue;
        next[i] = j;
        prev[j] = i;
    }
    EnvelopeSet out;
    for (const auto& [head, _] : next) {
        if (prev.contains(head)) continue;
        Envelope env{head};
        for (auto it = next.find(head); it != next.end(); it = next.find(it->second)) env.push_back(it->second);
        ++out.histogram[env.size()];
        out.envelopes.push_back(std::move(env));
    }
    return out;
}

inline nlohmann::json envelope_set_json(const EnvelopeSet& s) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [len, count] : s.histogram) hist.push_back({{"length", len}, {"count", count}});
    return {{"envelopes", s.envelopes}, {"histogram", hist}};
}

} // namespace deisolab
