#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/error.hpp"
#include "deisolab/types.hpp"

namespace deisolab {

/// 2x2 tallies with Envelope as the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;
    std::uint64_t fp = 0;

    std::uint64_t total() const noexcept { return tp + tn + fn + fp; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        tn += o.tn;
        fn += o.fn;
        fp += o.fp;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusion(std::span<const PairLabel> predicted, std::span<const PairLabel> truth) {
    if (predicted.size() != truth.size()) {
        throw DataError("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                        std::to_string(truth.size()) + " truth labels");
    }
    ConfusionCounts c;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const bool p = predicted[k] == PairLabel::Envelope, t = truth[k] == PairLabel::Envelope;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (!p && t) ++c.fn;
        else ++c.fp;
    }
    return c;
}

/// A metric value, or the reason it is undefined.
struct Metric {
    std::optional<double> value;
    std::string reason;

    static Metric of(double v) { return {v, {}}; }
    static Metric undefined(std::string why) { return {std::nullopt, std::move(why)}; }
    bool defined() const noexcept { return value.has_value(); }
};

struct MetricReport {
    Metric specificity;
    Metric precision;
    Metric recall;
    Metric balanced_accuracy;
    Metric csi;
    Metric mcc;
    Metric prevalence_threshold;
    Metric fowlkes_mallows;
};

inline MetricReport metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw DataError("metrics: empty confusion matrix");
    const auto tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    const auto fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    auto ratio = [](double num, double den, const char* why) {
        return den > 0.0 ? Metric::of(num / den) : Metric::undefined(why);
    };
    MetricReport r;
    r.specificity = ratio(tn, tn + fp, "no negative cases (TN+FP = 0)");
    r.precision = ratio(tp, tp + fp, "no positive predictions (TP+FP = 0)");
    r.recall = ratio(tp, tp + fn, "no positive cases (TP+FN = 0)");
    if (r.recall.defined() && r.specificity.defined()) {
        r.balanced_accuracy = Metric::of((*r.recall.value + *r.specificity.value) / 2.0);
    } else {
        r.balanced_accuracy = Metric::undefined("needs both recall and specificity");
    }
    r.csi = ratio(tp, tp + fn + fp, "no positive cases or predictions (TP+FN+FP = 0)");
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    r.mcc = den > 0.0 ? Metric::of((tp * tn - fp * fn) / std::sqrt(den))
                      : Metric::undefined("a confusion-matrix margin is zero");
    if (r.recall.defined() && r.specificity.defined()) {
        const double tpr = *r.recall.value, fpr = 1.0 - *r.specificity.value;
        const double a = std::sqrt(tpr), b = std::sqrt(fpr);
        r.prevalence_threshold =
            a + b > 0.0 ? Metric::of(b / (a + b)) : Metric::undefined("TPR and FPR are both zero");
    } else {
        r.prevalence_threshold = Metric::undefined("needs both recall and specificity");
    }
    if (r.precision.defined() && r.recall.defined()) {
        r.fowlkes_mallows = Metric::of(std::sqrt(*r.precision.value * *r.recall.value));
    } else {
        r.fowlkes_mallows = Metric::undefined("needs both precision and recall");
    }
    return r;
}

/// Percentage with two decimals, halves rounded away from zero. The fraction is
/// first snapped to 1e-9 % so that binary noise cannot flip a printed half.
inline std::string render_percent(double fraction) {
    const double pct = fraction * 100.0;
    const double snapped = std::round(pct * 1e9) / 1e9;
    const double cents = std::round(snapped * 100.0); // std::round: half away from zero
    const auto v = static_cast<long long>(cents);
    const auto a = v < 0 ? -v : v;
    std::string out = (v < 0 ? "-" : "") + std::to_string(a / 100) + ".";
    const auto frac = a % 100;
    if (frac < 10) out += '0';
    out += std::to_string(frac);
    return out;
}

inline nlohmann::json metric_json(const Metric& m) {
    if (m.defined()) return {{"value", *m.value}, {"percent", render_percent(*m.value)}};
    return {{"value", nullptr}, {"reason", m.reason}};
}

inline nlohmann::json confusion_json(const ConfusionCounts& c) {
    return {{"tp", c.tp}, {"tn", c.tn}, {"fn", c.fn}, {"fp", c.fp}};
}

inline ConfusionCounts confusion_from_json(const nlohmann::json& j) {
    return {j.at("tp").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>(), j.at("fn").get<std::uint64_t>(),
            j.at("fp").get<std::uint64_t>()};
}

inline nlohmann::json report_json(const MetricReport& r) {
    return {{"specificity", metric_json(r.specificity)},
            {"precision", metric_json(r.precision)},
            {"recall", metric_json(r.recall)},
            {"balanced_accuracy", metric_json(r.balanced_accuracy)},
            {"csi", metric_json(r.csi)},
            {"mcc", metric_json(r.mcc)},
            {"prevalence_threshold", metric_json(r.prevalence_threshold)},
            {"fowlkes_mallows", metric_json(r.fowlkes_mallows)}};
}

} // namespace deisolab
