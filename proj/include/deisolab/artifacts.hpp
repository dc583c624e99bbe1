#pragma once

// Reading and writing the pipeline's intermediate files: pairs.json,
// features.csv, labels.csv, model.json, result.json.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/classify.hpp"
#include "deisolab/features.hpp"
#include "deisolab/kernel_nb.hpp"
#include "deisolab/preselect.hpp"
#include "deisolab/text.hpp"
#include "deisolab/version.hpp"

namespace deisolab {

/// Identification stamped into every artifact.
struct Provenance {
    std::string config_hash = "0000000000000000";
    std::string tool_version = kToolVersion;
};

inline void stamp(nlohmann::json& j, const Provenance& p, std::string_view kind) {
    j["format_version"] = kFormatVersion;
    j["tool_version"] = p.tool_version;
    j["config_hash"] = p.config_hash;
    j["kind"] = kind;
}

inline std::string csv_stamp(const Provenance& p) {
    return "# tool_version=" + p.tool_version + " config_hash=" + p.config_hash +
           " format_version=" + std::to_string(kFormatVersion) + "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
    auto in = text::open_in(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    auto out = text::open_out(path);
    out << j.dump(2) << '\n';
}

inline void expect_kind(const nlohmann::json& j, std::string_view kind, const std::string& path) {
    if (j.value("format_version", 0) != kFormatVersion) throw DataError("'" + path + "': unsupported format_version");
    if (j.value("kind", std::string{}) != kind) {
        throw DataError("'" + path + "' is not a " + std::string(kind) + " file");
    }
}

// ---- pairs.json ----------------------------------------------------------

struct PairsArtifact {
    std::vector<PeakPair> pairs;
    std::vector<bool> retained;
    PreselectModel model;
    ThresholdSelection threshold;
    double window_da = 10.0;
    int k_neighbors = 60;
};

inline nlohmann::json pairs_json(const PairsArtifact& a, const Provenance& prov) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
        const auto& p = a.pairs[k];
        arr.push_back({{"i", p.i},
                       {"j", p.j},
                       {"m", p.m},
                       {"s", p.s},
                       {"possibility", p.possibility ? nlohmann::json(*p.possibility) : nlohmann::json(nullptr)},
                       {"retained", static_cast<bool>(a.retained[k])}});
    }
    std::size_t kept = 0;
    for (bool b : a.retained) kept += b;
    const ReductionReport red{a.pairs.size(), kept};
    nlohmann::json j = {{"window_da", a.window_da},
                        {"k_neighbors", a.k_neighbors},
                        {"fis", fis_to_json(a.model.fis)},
                        {"threshold",
                         {{"value", a.model.threshold},
                          {"provenance", to_string(a.model.provenance)},
                          {"k", a.threshold.k},
                          {"bic", a.threshold.bic},
                          {"note", a.threshold.note}}},
                        {"reduction",
                         {{"input_pairs", red.input_pairs},
                          {"retained_pairs", red.retained_pairs},
                          {"reduction_percent", red.reduction_percent()}}},
                        {"pairs", arr}};
    stamp(j, prov, "pairs");
    return j;
}

inline PairsArtifact pairs_from_json(const nlohmann::json& j, const std::string& path = "pairs.json") {
    expect_kind(j, "pairs", path);
    PairsArtifact a;
    try {
        a.window_da = j.at("window_da").get<double>();
        a.k_neighbors = j.at("k_neighbors").get<int>();
        a.model.fis = fis_from_json(j.at("fis"));
        const auto& t = j.at("threshold");
        a.model.threshold = t.at("value").get<double>();
        a.model.provenance =
            t.at("provenance").get<std::string>() == "gmm-derived" ? ThresholdProvenance::GmmDerived : ThresholdProvenance::Fixed;
        a.threshold.threshold = a.model.threshold;
        a.threshold.provenance = a.model.provenance;
        a.threshold.k = t.value("k", 0);
        a.threshold.bic = t.value("bic", std::vector<double>{});
        a.threshold.note = t.value("note", std::string{});
        for (const auto& jp : j.at("pairs")) {
            PeakPair p{jp.at("i").get<ComponentId>(), jp.at("j").get<ComponentId>(), jp.at("m").get<double>(),
                       jp.at("s").get<double>(), std::nullopt};
            if (!jp.at("possibility").is_null()) p.possibility = jp.at("possibility").get<double>();
            a.pairs.push_back(p);
            a.retained.push_back(jp.at("retained").get<bool>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
    return a;
}

inline std::vector<PeakPair> retained_pairs(const PairsArtifact& a) {
    std::vector<PeakPair> out;
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
        if (a.retained[k]) out.push_back(a.pairs[k]);
    }
    return out;
}

// ---- features.csv --------------------------------------------------------

inline std::string features_header() {
    std::string h = "i,j";
    for (auto n : kFeatureNames) h += "," + std::string(n);
    return h;
}

inline void write_features_csv(const std::string& path, std::span<const PeakPair> pairs,
                               std::span<const FeatureVector> features, const Provenance& prov) {
    auto out = text::open_out(path);
    out << csv_stamp(prov) << features_header() << '\n';
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        out << pairs[k].i << ',' << pairs[k].j;
        for (double v : features[k].values) out << ',' << text::format_double(v);
        out << '\n';
    }
}

struct FeatureTable {
    std::vector<PairKey> keys;
    std::vector<FeatureVector> vectors;
};

inline FeatureTable read_features_csv(const std::string& path) {
    const auto lines = text::read_lines(path);
    if (lines.empty() || lines.front() != features_header()) {
        throw DataError("'" + path + "': expected header '" + features_header() + "'");
    }
    FeatureTable t;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto cells = text::split(lines[l]);
        if (cells.size() != kFeatureCount + 2) throw DataError("'" + path + "': wrong column count on line " + std::to_string(l + 1));
        t.keys.emplace_back(static_cast<ComponentId>(text::parse_int(cells[0], "i")),
                            static_cast<ComponentId>(text::parse_int(cells[1], "j")));
        FeatureVector f;
        for (std::size_t k = 0; k < kFeatureCount; ++k) f[k] = text::parse_double(cells[k + 2], kFeatureNames[k]);
        t.vectors.push_back(f);
    }
    return t;
}

// ---- labels.csv ----------------------------------------------------------

enum class Split { None, Train, Test };

inline std::string_view to_string(Split s) noexcept {
    switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    default: return "none";
    }
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    if (s == "none") return Split::None;
    throw DataError("unknown split '" + std::string(s) + "'");
}

struct LabelRow {
    PairKey key;
    PairLabel label = PairLabel::NonEnvelope;
    Split split = Split::None;
};

inline void write_labels_csv(const std::string& path, std::span<const LabelRow> rows, const Provenance& prov) {
    auto out = text::open_out(path);
    out << csv_stamp(prov) << "i,j,label,split\n";
    for (const auto& r : rows) {
        out << r.key.first << ',' << r.key.second << ',' << to_string(r.label) << ',' << to_string(r.split) << '\n';
    }
}

/// The split column is optional; rows without one count as training rows.
inline std::vector<LabelRow> read_labels_csv(const std::string& path) {
    const auto lines = text::read_lines(path);
    if (lines.empty() || (lines.front() != "i,j,label,split" && lines.front() != "i,j,label")) {
        throw DataError("'" + path + "': expected header 'i,j,label[,split]'");
    }
    const bool has_split = lines.front() == "i,j,label,split";
    std::vector<LabelRow> rows;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto cells = text::split(lines[l]);
        if (cells.size() != (has_split ? 4u : 3u)) throw DataError("'" + path + "': wrong column count on line " + std::to_string(l + 1));
        LabelRow r;
        r.key = {static_cast<ComponentId>(text::parse_int(cells[0], "i")), static_cast<ComponentId>(text::parse_int(cells[1], "j"))};
        r.label = parse_label(cells[2]);
        r.split = has_split ? parse_split(cells[3]) : Split::Train;
        rows.push_back(r);
    }
    return rows;
}

// ---- result.json ---------------------------------------------------------

struct ResultArtifact {
    std::vector<ClassifiedPair> pairs;
    std::vector<Split> split; // per pair
    EnvelopeSet envelopes;
};

inline nlohmann::json result_json(const ResultArtifact& r, const Provenance& prov, std::string_view method) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
        const auto& c = r.pairs[k];
        arr.push_back({{"i", c.pair.i},
                       {"j", c.pair.j},
                       {"m", c.pair.m},
                       {"label", to_string(c.label)},
                       {"posterior", c.posterior},
                       {"preselect_rejected", c.preselect_rejected},
                       {"split", to_string(r.split.empty() ? Split::None : r.split[k])}});
    }
    nlohmann::json j = envelope_set_json(r.envelopes);
    j["method"] = method;
    j["pairs"] = arr;
    stamp(j, prov, "result");
    return j;
}

struct LoadedResult {
    std::string method;
    std::vector<PairKey> keys;
    std::vector<PairLabel> labels;
    std::vector<Split> split;
};

inline LoadedResult result_from_json(const nlohmann::json& j, const std::string& path = "result.json") {
    expect_kind(j, "result", path);
    LoadedResult r;
    try {
        r.method = j.value("method", std::string("unknown"));
        for (const auto& jp : j.at("pairs")) {
            r.keys.emplace_back(jp.at("i").get<ComponentId>(), jp.at("j").get<ComponentId>());
            r.labels.push_back(parse_label(jp.at("label").get<std::string>()));
            r.split.push_back(parse_split(jp.value("split", std::string("none"))));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
    return r;
}

} // namespace deisolab
