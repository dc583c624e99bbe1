#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/features.hpp"
#include "deisolab/kernel_nb.hpp"
#include "deisolab/metrics.hpp"
#include "deisolab/parallel.hpp"
#include "deisolab/random.hpp"

namespace deisolab {

/// Fisher-Yates with an explicit index draw so the permutation does not
/// depend on the standard library's shuffle.
inline void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

/// Fold id (0..folds-1) of every sample; each class is shuffled and dealt round-robin.
inline std::vector<int> stratified_folds(std::span<const PairLabel> labels, int folds, Rng& rng) {
    if (folds < 2) throw ConfigError("cross-validation: folds must be >= 2");
    std::vector<int> fold(labels.size(), 0);
    for (auto cls : {PairLabel::NonEnvelope, PairLabel::Envelope}) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < labels.size(); ++k) {
            if (labels[k] == cls) idx.push_back(k);
        }
        if (idx.size() < static_cast<std::size_t>(folds)) {
            throw DataError("cross-validation: class " + std::string(to_string(cls)) + " has " +
                            std::to_string(idx.size()) + " samples, fewer than " + std::to_string(folds) + " folds");
        }
        shuffle_indices(idx, rng);
        for (std::size_t p = 0; p < idx.size(); ++p) fold[idx[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));
    }
    return fold;
}

struct CvOptions {
    int folds = 5;
    int repeats = 100;
    std::uint64_t seed = 1;
    KernelNbConfig nb;
};

struct CvReport {
    int folds = 5;
    int repeats = 0;
    std::vector<double> accuracy;          // per repeat, pooled over folds
    std::vector<double> balanced_accuracy; // per repeat, pooled over folds
    std::vector<std::vector<ConfusionCounts>> fold_confusion; // [repeat][fold]
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;
    double mean_balanced_accuracy = 0.0;
    double sd_balanced_accuracy = 0.0;

    bool operator==(const CvReport&) const = default;
};

inline double accuracy_of(const ConfusionCounts& c) {
    return c.total() ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) : 0.0;
}

inline double balanced_accuracy_of(const ConfusionCounts& c) {
    const auto m = metrics(c);
    return m.balanced_accuracy.value.value_or(0.0);
}

/// Repeated stratified k-fold of the kernel NB on `rows` (columns = `names`).
/// Repeat r draws its folds from substream(seed, r).
inline CvReport cross_validate(std::span<const std::vector<double>> rows, std::span<const PairLabel> labels,
                               const std::vector<std::string>& names, const CvOptions& opt = {},
                               unsigned threads = 1) {
    if (opt.repeats < 1) throw ConfigError("cross-validation: repeats must be >= 1");
    if (rows.size() != labels.size()) throw DataError("cross-validation: rows and labels differ in length");
    CvReport rep;
    rep.folds = opt.folds;
    rep.repeats = opt.repeats;
    rep.fold_confusion.assign(static_cast<std::size_t>(opt.repeats), {});
    {
        Rng probe = substream(opt.seed, 0);
        stratified_folds(labels, opt.folds, probe); // validates class sizes up front
    }
    parallel_for(static_cast<std::size_t>(opt.repeats), threads, [&](std::size_t r) {
        Rng rng = substream(opt.seed, r);
        const auto fold = stratified_folds(labels, opt.folds, rng);
        std::vector<ConfusionCounts> per_fold(static_cast<std::size_t>(opt.folds));
        for (int f = 0; f < opt.folds; ++f) {
            std::vector<std::vector<double>> train;
            std::vector<PairLabel> train_labels;
            for (std::size_t k = 0; k < rows.size(); ++k) {
                if (fold[k] == f) continue;
                train.push_back(rows[k]);
                train_labels.push_back(labels[k]);
            }
            const auto model = fit_kernel_nb(train, train_labels, names, opt.nb);
            auto& c = per_fold[static_cast<std::size_t>(f)];
            for (std::size_t k = 0; k < rows.size(); ++k) {
                if (fold[k] != f) continue;
                const bool p = predict(model, rows[k]).label == PairLabel::Envelope;
                const bool t = labels[k] == PairLabel::Envelope;
                if (p && t) ++c.tp;
                else if (!p && !t) ++c.tn;
                else if (!p && t) ++c.fn;
                else ++c.fp;
            }
        }
        rep.fold_confusion[r] = std::move(per_fold);
    });
    for (const auto& per_fold : rep.fold_confusion) {
        ConfusionCounts pooled;
        for (const auto& c : per_fold) pooled += c;
        rep.accuracy.push_back(accuracy_of(pooled));
        rep.balanced_accuracy.push_back(balanced_accuracy_of(pooled));
    }
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = stats::mean(v);
        sd = stats::sample_sd(v);
    };
    mean_sd(rep.accuracy, rep.mean_accuracy, rep.sd_accuracy);
    mean_sd(rep.balanced_accuracy, rep.mean_balanced_accuracy, rep.sd_balanced_accuracy);
    return rep;
}

inline nlohmann::json cv_report_json(const CvReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& per_fold : r.fold_confusion) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& c : per_fold) row.push_back(confusion_json(c));
        folds.push_back(row);
    }
    return {{"folds", r.folds},
            {"repeats", r.repeats},
            {"mean_accuracy", r.mean_accuracy},
            {"sd_accuracy", r.sd_accuracy},
            {"mean_balanced_accuracy", r.mean_balanced_accuracy},
            {"sd_balanced_accuracy", r.sd_balanced_accuracy},
            {"accuracy", r.accuracy},
            {"balanced_accuracy", r.balanced_accuracy},
            {"fold_confusion", folds}};
}

struct SelectionOptions {
    CvOptions cv{5, 1, 1, {}};
    double min_improvement = 1e-3;
    std::size_t max_features = kFeatureCount;
};

struct SelectionStep {
    std::string feature;
    double score = 0.0; // mean cross-validated balanced accuracy after adding it
};

/// Greedy forward wrapper: repeatedly add the descriptor that most improves
/// cross-validated balanced accuracy; stop when the gain drops below
/// `min_improvement`. Ties go to the earlier descriptor.
inline std::vector<SelectionStep> forward_select(std::span<const FeatureVector> vectors, std::span<const PairLabel> labels,
                                                 const SelectionOptions& opt = {}, unsigned threads = 1) {
    const bool has_e = std::find(labels.begin(), labels.end(), PairLabel::Envelope) != labels.end();
    const bool has_ne = std::find(labels.begin(), labels.end(), PairLabel::NonEnvelope) != labels.end();
    if (!has_e || !has_ne) throw DataError("forward_select: labels must contain both classes");
    std::vector<std::size_t> chosen;
    std::vector<SelectionStep> steps;
    double best_so_far = 0.0;
    while (chosen.size() < std::min(opt.max_features, kFeatureCount)) {
        std::vector<std::size_t> candidates;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            if (std::find(chosen.begin(), chosen.end(), f) == chosen.end()) candidates.push_back(f);
        }
        std::vector<double> score(candidates.size(), 0.0);
        parallel_for(candidates.size(), threads, [&](std::size_t c) {
            auto cols = chosen;
            cols.push_back(candidates[c]);
            std::vector<std::string> names;
            for (auto k : cols) names.emplace_back(kFeatureNames[k]);
            score[c] = cross_validate(project(vectors, cols), labels, names, opt.cv).mean_balanced_accuracy;
        });
        std::size_t best = 0;
        for (std::size_t c = 1; c < candidates.size(); ++c) {
            if (score[c] > score[best]) best = c;
        }
        if (!steps.empty() && score[best] - best_so_far < opt.min_improvement) break;
        chosen.push_back(candidates[best]);
        best_so_far = score[best];
        steps.push_back({std::string(kFeatureNames[candidates[best]]), score[best]});
    }
    return steps;
}

} // namespace deisolab
