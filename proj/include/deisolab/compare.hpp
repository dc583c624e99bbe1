#pragma once

// Agreement between several labelings of one pair universe, as exact
// set-intersection regions (the tabular form of a Venn diagram).

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/error.hpp"
#include "deisolab/types.hpp"

namespace deisolab {

struct LabelSet {
    std::string name;
    std::vector<PairKey> keys;
    std::vector<PairLabel> labels;
};

struct RegionCount {
    std::vector<std::string> methods; // the exact set of methods giving the label
    std::uint64_t exact = 0;          // items labelled so by exactly these methods
    std::uint64_t inclusive = 0;      // items labelled so by at least these methods
};

struct PolarityRegions {
    std::vector<RegionCount> regions; // every subset, including the empty one
};

struct IntersectionReport {
    std::vector<std::string> methods;
    std::uint64_t universe = 0;
    PolarityRegions non_envelope;
    PolarityRegions envelope;
    std::uint64_t common_non_envelope = 0;
    double intersection_fraction = 0.0; // common nE / universe
};

inline constexpr std::size_t kMaxCompareMethods = 16;

inline IntersectionReport compare_label_sets(std::vector<LabelSet> sets) {
    if (sets.size() < 2) throw ConfigError("compare: at least two label sets are required");
    if (sets.size() > kMaxCompareMethods) throw ConfigError("compare: at most 16 label sets are supported");
    // Align every set to the sorted key order of the first.
    std::vector<PairKey> universe;
    for (auto& s : sets) {
        if (s.keys.size() != s.labels.size()) throw DataError("compare: '" + s.name + "' has mismatched keys and labels");
        std::vector<std::size_t> order(s.keys.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.keys[a] < s.keys[b]; });
        LabelSet sorted{s.name, {}, {}};
        for (auto k : order) {
            sorted.keys.push_back(s.keys[k]);
            sorted.labels.push_back(s.labels[k]);
        }
        if (std::adjacent_find(sorted.keys.begin(), sorted.keys.end()) != sorted.keys.end()) {
            throw DataError("compare: '" + s.name + "' lists a pair twice");
        }
        s = std::move(sorted);
        if (universe.empty()) universe = s.keys;
        else if (s.keys != universe) throw DataError("compare: '" + s.name + "' covers a different pair universe");
    }
    const std::size_t m = sets.size();
    const std::size_t subsets = std::size_t{1} << m;
    IntersectionReport rep;
    for (const auto& s : sets) rep.methods.push_back(s.name);
    rep.universe = universe.size();
    std::vector<std::uint64_t> exact_ne(subsets, 0), exact_e(subsets, 0);
    for (std::size_t k = 0; k < universe.size(); ++k) {
        std::size_t mask_ne = 0, mask_e = 0;
        for (std::size_t s = 0; s < m; ++s) {
            if (sets[s].labels[k] == PairLabel::Envelope) mask_e |= std::size_t{1} << s;
            else mask_ne |= std::size_t{1} << s;
        }
        ++exact_ne[mask_ne];
        ++exact_e[mask_e];
    }
    auto fill = [&](const std::vector<std::uint64_t>& exact, PolarityRegions& out) {
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            RegionCount r;
            for (std::size_t s = 0; s < m; ++s) {
                if (mask & (std::size_t{1} << s)) r.methods.push_back(rep.methods[s]);
            }
            r.exact = exact[mask];
            for (std::size_t sup = 0; sup < subsets; ++sup) {
                if ((sup & mask) == mask) r.inclusive += exact[sup];
            }
            out.regions.push_back(std::move(r));
        }
    };
    fill(exact_ne, rep.non_envelope);
    fill(exact_e, rep.envelope);
    rep.common_non_envelope = exact_ne[subsets - 1];
    rep.intersection_fraction =
        rep.universe ? static_cast<double>(rep.common_non_envelope) / static_cast<double>(rep.universe) : 0.0;
    return rep;
}

inline nlohmann::json intersection_json(const IntersectionReport& r) {
    auto regions = [](const PolarityRegions& p) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& reg : p.regions) {
            arr.push_back({{"methods", reg.methods}, {"exact", reg.exact}, {"inclusive", reg.inclusive}});
        }
        return arr;
    };
    return {{"methods", r.methods},
            {"universe", r.universe},
            {"common_nE", r.common_non_envelope},
            {"intersection_fraction", r.intersection_fraction},
            {"regions_nE", regions(r.non_envelope)},
            {"regions_E", regions(r.envelope)}};
}

} // namespace deisolab
