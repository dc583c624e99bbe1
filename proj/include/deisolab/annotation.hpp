#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "deisolab/types.hpp"

namespace deisolab {

/// Sorted list of adjacent-member pairs of a set of envelopes. Envelopes
/// may share components; the same pair reported twice is kept once.
inline std::vector<PairKey> adjacent_pairs(std::span<const Envelope> envelopes) {
    std::vector<PairKey> out;
    for (const auto& env : envelopes) {
        for (std::size_t k = 1; k < env.size(); ++k) {
            auto a = env[k - 1];
            auto b = env[k];
            if (a == b) continue;
            out.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Label each pair Envelope iff it joins consecutive members of one envelope.
inline std::vector<PairLabel> labels_from_envelopes(std::span<const Envelope> envelopes,
                                                    std::span<const PairKey> pairs) {
    const auto adjacent = adjacent_pairs(envelopes);
    std::vector<PairLabel> labels;
    labels.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        PairKey key{std::min(i, j), std::max(i, j)};
        labels.push_back(std::binary_search(adjacent.begin(), adjacent.end(), key) ? PairLabel::Envelope
                                                                                    : PairLabel::NonEnvelope);
    }
    return labels;
}

inline std::vector<PairLabel> annotation_to_pair_labels(const Dataset& dataset, std::span<const PairKey> pairs) {
    if (!dataset.annotations) {
        throw DataError("dataset has no expert annotations; pair labels cannot be derived");
    }
    return labels_from_envelopes(*dataset.annotations, pairs);
}

} // namespace deisolab
