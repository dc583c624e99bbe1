#pragma once

// Stage wiring for `deisolab run` and the individual subcommands.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/annotation.hpp"
#include "deisolab/artifacts.hpp"
#include "deisolab/baseline.hpp"
#include "deisolab/classify.hpp"
#include "deisolab/cross_validation.hpp"
#include "deisolab/dataset_io.hpp"
#include "deisolab/features.hpp"
#include "deisolab/metrics.hpp"
#include "deisolab/preselect.hpp"
#include "deisolab/synthgen.hpp"

namespace deisolab {

inline const std::vector<std::string>& all_stages() {
    static const std::vector<std::string> s{"generate", "preselect", "features", "train", "classify", "evaluate"};
    return s;
}

struct PipelineConfig {
    // io
    std::string in;
    std::string out = "deisolab_out";
    std::string synth_config;
    std::vector<std::string> stages = all_stages();
    int threads = 1;
    int verbose = 1;
    // preselection
    double window_da = 10.0;
    int k_neighbors = 60;
    std::string s_ratio = "variance";
    std::string fis_config;
    std::string threshold_mode = "gmm";
    double threshold = kFallbackThreshold;
    int k_max = 8;
    double elbow_fraction = 0.1;
    std::uint64_t gmm_seed = 1;
    // imaging
    bool equalize = true;
    bool median_filter = true;
    bool normalize = true;
    int histogram_bins = 256;
    int glcm_levels = 8;
    std::string glcm_range = "fixed";
    bool glcm_symmetric = true;
    double entropy_base = 2.0;
    bool save_images = false;
    // classifier
    std::vector<std::string> features = default_selected_features();
    bool select_features = false;
    std::string priors = "empirical";
    std::string bandwidth_rule = "silverman";
    double decision_threshold = 0.5;
    double train_fraction = 0.5;
    std::uint64_t split_seed = 1;
    int cv_folds = 5;
    int cv_repeats = 100;
    std::uint64_t cv_seed = 1;
    // assembly and evaluation
    double assembly_tolerance = kAssemblyTolerance;
    bool baseline = true;
    double baseline_tolerance = kAssemblyTolerance;
    double baseline_max_error = 0.5;

    void validate() const {
        for (const auto& s : stages) {
            if (std::find(all_stages().begin(), all_stages().end(), s) == all_stages().end()) {
                throw ConfigError("unknown stage '" + s + "'");
            }
        }
        if (out.empty()) throw ConfigError("an output directory is required");
        if (threads < 1) throw ConfigError("threads must be >= 1");
        if (s_ratio != "variance" && s_ratio != "sigma") throw ConfigError("s_ratio must be variance|sigma");
        if (threshold_mode != "gmm" && threshold_mode != "fixed") throw ConfigError("threshold_mode must be gmm|fixed");
        if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
        if (k_max < 1) throw ConfigError("k_max must be >= 1");
        if (!(elbow_fraction > 0.0 && elbow_fraction < 1.0)) throw ConfigError("elbow_fraction must lie in (0, 1)");
        if (histogram_bins < 2) throw ConfigError("histogram_bins must be >= 2");
        if (glcm_levels < 2) throw ConfigError("glcm_levels must be >= 2");
        if (glcm_range != "fixed" && glcm_range != "image") throw ConfigError("glcm_range must be fixed|image");
        if (!(entropy_base > 1.0)) throw ConfigError("entropy_base must be > 1");
        if (features.empty()) throw ConfigError("features must name at least one descriptor");
        for (const auto& f : features) feature_index(f);
        if (priors != "empirical" && priors != "balanced") throw ConfigError("priors must be empirical|balanced");
        parse_bandwidth_rule(bandwidth_rule);
        if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) throw ConfigError("decision_threshold must lie in (0, 1)");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
        if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
        if (cv_repeats < 0) throw ConfigError("cv_repeats must be >= 0");
        if (!(assembly_tolerance > 0.0) || !(baseline_tolerance > 0.0) || !(baseline_max_error > 0.0)) {
            throw ConfigError("tolerances must be positive");
        }
    }

    bool has_stage(std::string_view s) const { return std::find(stages.begin(), stages.end(), s) != stages.end(); }

    FeatureConfig feature_config() const {
        FeatureConfig f;
        f.enhance = {equalize, median_filter, normalize, histogram_bins};
        f.glcm.levels = glcm_levels;
        f.glcm.symmetric = glcm_symmetric;
        f.glcm.range = glcm_range == "fixed" ? QuantRange::Fixed : QuantRange::Image;
        f.entropy_base = entropy_base;
        return f;
    }

    KernelNbConfig nb_config() const {
        return {priors == "balanced" ? PriorMode::Balanced : PriorMode::Empirical, decision_threshold,
                parse_bandwidth_rule(bandwidth_rule)};
    }

    FISConfig fis() const {
        FISConfig c = fis_config.empty() ? default_fis_config() : fis_from_json(read_json_file(fis_config));
        c.ratio = s_ratio == "sigma" ? WidthRatio::Sigma : WidthRatio::Variance;
        return c;
    }
};

/// One line of `--help` text per config field; the CLI and the docs test both use it.
struct ConfigField {
    std::string key;
    std::string help;
};

inline const std::vector<ConfigField>& pipeline_config_fields() {
    static const std::vector<ConfigField> f{
        {"in", "dataset directory or manifest.json"},
        {"out", "output directory for all artifacts"},
        {"synth_config", "generate the input from this synthetic-data config (JSON) instead of --in"},
        {"stages", "comma list of stages: generate,preselect,features,train,classify,evaluate"},
        {"threads", "worker threads for pair scoring and feature extraction"},
        {"verbose", "0 = quiet, 1 = progress on stderr"},
        {"window_da", "m/z window for candidate pairs [Da]; <= 0 disables"},
        {"k_neighbors", "max right-neighbours per component; 0 disables"},
        {"s_ratio", "width ratio input of the fuzzy system: variance|sigma"},
        {"fis_config", "fuzzy inference system JSON; empty = built-in default"},
        {"threshold_mode", "gmm (mixture-derived) or fixed"},
        {"threshold", "possibility threshold for fixed mode and the mixture fallback"},
        {"k_max", "largest mixture size tried by the BIC search"},
        {"elbow_fraction", "BIC elbow: keep adding components while the gain is above this share of the largest gain"},
        {"gmm_seed", "seed of the mixture fit"},
        {"equalize", "histogram equalization of ion images"},
        {"median_filter", "3x3 median filter of ion images"},
        {"normalize", "min-max normalization of ion images"},
        {"histogram_bins", "bins used by histogram equalization"},
        {"glcm_levels", "gray levels of the co-occurrence matrix"},
        {"glcm_range", "quantization range: fixed ([0,1]) or image (own min/max)"},
        {"glcm_symmetric", "count co-occurrences in both directions"},
        {"entropy_base", "logarithm base of the entropy descriptor"},
        {"save_images", "write differential images of retained pairs as PGM"},
        {"features", "comma list of descriptors used by the classifier"},
        {"select_features", "choose descriptors by forward selection instead of --features"},
        {"priors", "class priors: empirical|balanced"},
        {"bandwidth_rule", "kernel bandwidth spread: silverman (min of sd and iqr/1.349) or sd"},
        {"decision_threshold", "posterior above which a pair is labelled E"},
        {"train_fraction", "share of retained annotated pairs used for training"},
        {"split_seed", "seed of the train/test split"},
        {"cv_folds", "cross-validation folds"},
        {"cv_repeats", "cross-validation repeats (0 skips cross-validation)"},
        {"cv_seed", "seed of the cross-validation folds"},
        {"assembly_tolerance", "tolerance on the isotope step when chaining envelopes [Da]"},
        {"baseline", "also run the intensity-only baseline"},
        {"baseline_tolerance", "baseline tolerance on the isotope step [Da]"},
        {"baseline_max_error", "baseline bound on the relative intensity-ratio error"},
    };
    return f;
}

inline nlohmann::json config_json(const PipelineConfig& c) {
    return {{"in", c.in},
            {"out", c.out},
            {"synth_config", c.synth_config},
            {"stages", c.stages},
            {"threads", c.threads},
            {"verbose", c.verbose},
            {"window_da", c.window_da},
            {"k_neighbors", c.k_neighbors},
            {"s_ratio", c.s_ratio},
            {"fis_config", c.fis_config},
            {"threshold_mode", c.threshold_mode},
            {"threshold", c.threshold},
            {"k_max", c.k_max},
            {"elbow_fraction", c.elbow_fraction},
            {"gmm_seed", c.gmm_seed},
            {"equalize", c.equalize},
            {"median_filter", c.median_filter},
            {"normalize", c.normalize},
            {"histogram_bins", c.histogram_bins},
            {"glcm_levels", c.glcm_levels},
            {"glcm_range", c.glcm_range},
            {"glcm_symmetric", c.glcm_symmetric},
            {"entropy_base", c.entropy_base},
            {"save_images", c.save_images},
            {"features", c.features},
            {"select_features", c.select_features},
            {"priors", c.priors},
            {"bandwidth_rule", c.bandwidth_rule},
            {"decision_threshold", c.decision_threshold},
            {"train_fraction", c.train_fraction},
            {"split_seed", c.split_seed},
            {"cv_folds", c.cv_folds},
            {"cv_repeats", c.cv_repeats},
            {"cv_seed", c.cv_seed},
            {"assembly_tolerance", c.assembly_tolerance},
            {"baseline", c.baseline},
            {"baseline_tolerance", c.baseline_tolerance},
            {"baseline_max_error", c.baseline_max_error}};
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
    PipelineConfig c;
    const auto defaults = config_json(c);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!defaults.contains(it.key())) throw ConfigError("pipeline config: unknown key '" + it.key() + "'");
    }
    try {
#define DEISOLAB_FIELD(name) c.name = j.value(#name, c.name)
        DEISOLAB_FIELD(in);
        DEISOLAB_FIELD(out);
        DEISOLAB_FIELD(synth_config);
        DEISOLAB_FIELD(stages);
        DEISOLAB_FIELD(threads);
        DEISOLAB_FIELD(verbose);
        DEISOLAB_FIELD(window_da);
        DEISOLAB_FIELD(k_neighbors);
        DEISOLAB_FIELD(s_ratio);
        DEISOLAB_FIELD(fis_config);
        DEISOLAB_FIELD(threshold_mode);
        DEISOLAB_FIELD(threshold);
        DEISOLAB_FIELD(k_max);
        DEISOLAB_FIELD(elbow_fraction);
        DEISOLAB_FIELD(gmm_seed);
        DEISOLAB_FIELD(equalize);
        DEISOLAB_FIELD(median_filter);
        DEISOLAB_FIELD(normalize);
        DEISOLAB_FIELD(histogram_bins);
        DEISOLAB_FIELD(glcm_levels);
        DEISOLAB_FIELD(glcm_range);
        DEISOLAB_FIELD(glcm_symmetric);
        DEISOLAB_FIELD(entropy_base);
        DEISOLAB_FIELD(save_images);
        DEISOLAB_FIELD(features);
        DEISOLAB_FIELD(select_features);
        DEISOLAB_FIELD(priors);
        DEISOLAB_FIELD(bandwidth_rule);
        DEISOLAB_FIELD(decision_threshold);
        DEISOLAB_FIELD(train_fraction);
        DEISOLAB_FIELD(split_seed);
        DEISOLAB_FIELD(cv_folds);
        DEISOLAB_FIELD(cv_repeats);
        DEISOLAB_FIELD(cv_seed);
        DEISOLAB_FIELD(assembly_tolerance);
        DEISOLAB_FIELD(baseline);
        DEISOLAB_FIELD(baseline_tolerance);
        DEISOLAB_FIELD(baseline_max_error);
#undef DEISOLAB_FIELD
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Hash of the analysis parameters. Paths, thread count and verbosity are
/// left out; referenced config files enter by content.
inline std::string config_hash(const PipelineConfig& c) {
    auto j = config_json(c);
    for (const char* k : {"in", "out", "threads", "verbose", "fis_config", "synth_config", "stages"}) j.erase(k);
    j["fis"] = fis_to_json(c.fis());
    if (!c.synth_config.empty()) j["synth"] = read_json_file(c.synth_config);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

/// Files written by a run; removed again unless the run commits.
class ArtifactGuard {
public:
    ArtifactGuard() = default;
    ArtifactGuard(const ArtifactGuard&) = delete;
    ArtifactGuard& operator=(const ArtifactGuard&) = delete;
    ~ArtifactGuard() {
        if (committed_) return;
        std::error_code ec;
        for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) std::filesystem::remove_all(*it, ec);
    }

    std::string track(const std::filesystem::path& p) {
        paths_.push_back(p);
        return p.string();
    }
    void commit() noexcept { committed_ = true; }

private:
    std::vector<std::filesystem::path> paths_;
    bool committed_ = false;
};

struct EvaluationReport {
    std::size_t universe = 0;
    ConfusionCounts confusion;
    MetricReport metrics;
};

/// Scores `labels` against truth over the pairs not used for training.
inline EvaluationReport evaluate_labels(std::span<const PairKey> keys, std::span<const PairLabel> labels,
                                        std::span<const Split> split, std::span<const Envelope> truth) {
    std::vector<PairKey> k2;
    std::vector<PairLabel> p2;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        if (!split.empty() && split[k] == Split::Train) continue;
        k2.push_back(keys[k]);
        p2.push_back(labels[k]);
    }
    const auto t2 = labels_from_envelopes(truth, k2);
    EvaluationReport r;
    r.universe = k2.size();
    r.confusion = confusion(p2, t2);
    r.metrics = metrics(r.confusion);
    return r;
}

inline nlohmann::json evaluation_json(const EvaluationReport& r) {
    return {{"universe_pairs", r.universe}, {"confusion", confusion_json(r.confusion)}, {"metrics", report_json(r.metrics)}};
}

/// Stratified train/test assignment of the labelled pairs; each class keeps
/// round(train_fraction * n) pairs (at least one) for training.
inline std::vector<Split> split_labels(std::span<const PairLabel> labels, double train_fraction, std::uint64_t seed) {
    std::vector<Split> out(labels.size(), Split::Test);
    for (auto cls : {PairLabel::NonEnvelope, PairLabel::Envelope}) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < labels.size(); ++k) {
            if (labels[k] == cls) idx.push_back(k);
        }
        if (idx.empty()) continue;
        Rng rng = substream(seed, static_cast<std::uint64_t>(cls));
        shuffle_indices(idx, rng);
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size());
        for (std::size_t p = 0; p < n_train; ++p) out[idx[p]] = Split::Train;
    }
    return out;
}

/// Fits the classifier on the training rows of `rows` (matched to `table` by
/// pair), optionally selecting descriptors and cross-validating first.
/// `report` receives the model.json body.
inline KernelNbModel train_from_table(const FeatureTable& table, std::span<const LabelRow> rows,
                                      const PipelineConfig& cfg, unsigned threads, nlohmann::json& report) {
    std::map<PairKey, std::size_t> index;
    for (std::size_t k = 0; k < table.keys.size(); ++k) index.emplace(table.keys[k], k);
    std::vector<FeatureVector> vecs;
    std::vector<PairLabel> labels;
    for (const auto& r : rows) {
        if (r.split != Split::Train) continue;
        auto it = index.find(r.key);
        if (it == index.end()) {
            throw DataError("labelled pair (" + std::to_string(r.key.first) + "," + std::to_string(r.key.second) +
                            ") has no feature row");
        }
        vecs.push_back(table.vectors[it->second]);
        labels.push_back(r.label);
    }
    if (vecs.empty()) throw DataError("no training rows");
    std::vector<std::string> names = cfg.features;
    nlohmann::json selection = nullptr;
    if (cfg.select_features) {
        SelectionOptions sopt;
        sopt.cv = {cfg.cv_folds, 1, cfg.cv_seed, cfg.nb_config()};
        const auto steps = forward_select(vecs, labels, sopt, threads);
        names.clear();
        selection = nlohmann::json::array();
        for (const auto& s : steps) {
            names.push_back(s.feature);
            selection.push_back({{"feature", s.feature}, {"balanced_accuracy", s.score}});
        }
    }
    const auto cols = feature_indices(names);
    const auto x = project(vecs, cols);
    nlohmann::json cv = nullptr;
    const auto n_e = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), PairLabel::Envelope));
    const auto smallest = std::min(n_e, labels.size() - n_e);
    if (cfg.cv_repeats > 0 && smallest >= static_cast<std::size_t>(cfg.cv_folds)) {
        const auto rep = cross_validate(x, labels, names, {cfg.cv_folds, cfg.cv_repeats, cfg.cv_seed, cfg.nb_config()}, threads);
        cv = cv_report_json(rep);
    } else if (cfg.cv_repeats > 0) {
        cv = {{"skipped", "smallest class has " + std::to_string(smallest) + " training pairs, fewer than " +
                              std::to_string(cfg.cv_folds) + " folds"}};
    }
    auto model = fit_kernel_nb(x, labels, names, cfg.nb_config());
    report = {{"model", model_to_json(model)}, {"cross_validation", cv}, {"selection", selection},
              {"training_pairs", vecs.size()}};
    return model;
}

struct RunSummary {
    std::vector<std::string> artifacts;
    std::optional<EvaluationReport> evaluation;
    std::optional<EvaluationReport> baseline;
};

namespace detail {

inline void log(const PipelineConfig& c, const std::string& msg) {
    if (c.verbose > 0) std::cerr << "[deisolab] " << msg << '\n';
}

} // namespace detail

/// Candidate pairs, possibilities, threshold and retention flags.
inline PairsArtifact preselect_stage(const Dataset& ds, const PipelineConfig& cfg) {
    PairsArtifact a;
    a.window_da = cfg.window_da;
    a.k_neighbors = cfg.k_neighbors;
    a.model.fis = cfg.fis();
    a.pairs = candidate_pairs(ds, cfg.window_da, cfg.k_neighbors, a.model.fis.ratio);
    detail::log(cfg, "scoring " + std::to_string(a.pairs.size()) + " candidate pairs");
    score_pairs(a.pairs, MamdaniEngine(a.model.fis), static_cast<unsigned>(cfg.threads));
    if (cfg.threshold_mode == "gmm") {
        std::vector<double> poss;
        for (const auto& p : a.pairs) poss.push_back(*p.possibility);
        ThresholdOptions topt;
        topt.k_max = cfg.k_max;
        topt.elbow_fraction = cfg.elbow_fraction;
        topt.seed = cfg.gmm_seed;
        a.threshold = derive_threshold(poss, topt);
        if (a.threshold.provenance == ThresholdProvenance::Fixed) a.threshold.threshold = cfg.threshold;
    } else {
        a.threshold.threshold = cfg.threshold;
        a.threshold.note = "fixed by configuration";
    }
    a.model.threshold = a.threshold.threshold;
    a.model.provenance = a.threshold.provenance;
    const auto sel = preselect(a.pairs, a.model);
    a.retained = sel.kept;
    detail::log(cfg, "threshold " + text::format_double(a.model.threshold) + " (" +
                         std::string(to_string(a.model.provenance)) + "), retained " +
                         std::to_string(sel.report.retained_pairs));
    return a;
}

/// Labels every candidate pair: rejected pairs are nE, retained pairs are
/// predicted from their row in `table`. Pairs in `train_keys` are marked as
/// training pairs.
inline ResultArtifact classify_stage(const PairsArtifact& pa, const FeatureTable& table, const KernelNbModel& model,
                                     const std::set<PairKey>& train_keys, const PipelineConfig& cfg) {
    const auto retained = retained_pairs(pa);
    if (retained.size() != table.keys.size()) throw DataError("features do not match the retained pairs");
    for (std::size_t k = 0; k < retained.size(); ++k) {
        if (retained[k].key() != table.keys[k]) throw DataError("features do not match the retained pairs");
    }
    const auto predicted = predict_pairs(retained, table.vectors, model, static_cast<unsigned>(cfg.threads));
    ResultArtifact res;
    std::size_t r = 0;
    for (std::size_t k = 0; k < pa.pairs.size(); ++k) {
        if (pa.retained[k]) res.pairs.push_back(predicted[r++]);
        else res.pairs.push_back({pa.pairs[k], PairLabel::NonEnvelope, 0.0, true});
        res.split.push_back(train_keys.contains(pa.pairs[k].key()) ? Split::Train : Split::Test);
    }
    res.envelopes = assemble_envelopes(res.pairs, cfg.assembly_tolerance);
    return res;
}

/// Runs the selected stages. Stages whose inputs were not produced in this
/// run read them from the output directory.
inline RunSummary run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    const fs::path out(cfg.out);
    const Provenance prov{config_hash(cfg), kToolVersion};
    const auto threads = static_cast<unsigned>(cfg.threads);
    const auto fcfg = cfg.feature_config();
    ArtifactGuard guard;
    RunSummary summary;
    if (!fs::exists(out)) {
        fs::create_directories(out);
        guard.track(out);
    }
    auto artifact = [&](const std::string& name) {
        const auto p = guard.track(out / name);
        summary.artifacts.push_back(name);
        return p;
    };

    const bool generating = cfg.has_stage("generate") && !cfg.synth_config.empty();
    const bool needs_dataset = generating || cfg.has_stage("preselect") || cfg.has_stage("features") ||
                               cfg.has_stage("classify") || cfg.has_stage("evaluate");
    std::optional<Dataset> ds;
    if (generating) {
        SynthConfig sc;
        from_json(read_json_file(cfg.synth_config), sc);
        detail::log(cfg, "generating synthetic dataset");
        auto gen = generate(sc, threads);
        save_dataset(gen.dataset, guard.track(out / "dataset"));
        summary.artifacts.push_back("dataset");
        auto gt = ground_truth_json(gen.truth);
        stamp(gt, prov, "ground_truth");
        write_json_file(artifact("ground_truth.json"), gt);
        ds = std::move(gen.dataset);
    } else if (needs_dataset) {
        const std::string src = !cfg.in.empty() ? cfg.in : (out / "dataset").string();
        if (cfg.in.empty() && !fs::exists(src)) throw ConfigError("no input: pass --in or --synth-config");
        ds = load_dataset(manifest_path_for(src)).dataset;
    }

    // preselect
    std::optional<PairsArtifact> pairs;
    if (cfg.has_stage("preselect")) {
        auto a = preselect_stage(*ds, cfg);
        write_json_file(artifact("pairs.json"), pairs_json(a, prov));
        pairs = std::move(a);
    }
    auto need_pairs = [&]() -> const PairsArtifact& {
        if (!pairs) pairs = pairs_from_json(read_json_file((out / "pairs.json").string()), (out / "pairs.json").string());
        return *pairs;
    };

    // features (+ labels of retained pairs when the dataset is annotated)
    std::optional<FeatureTable> table;
    std::optional<std::vector<LabelRow>> label_rows;
    if (cfg.has_stage("features")) {
        const auto retained = retained_pairs(need_pairs());
        detail::log(cfg, "extracting features for " + std::to_string(retained.size()) + " pairs");
        FeatureTable t;
        t.vectors = extract_features(*ds, retained, fcfg, threads);
        for (const auto& p : retained) t.keys.push_back(p.key());
        write_features_csv(artifact("features.csv"), retained, t.vectors, prov);
        if (cfg.save_images) {
            const auto dir = out / "images";
            guard.track(dir);
            fs::create_directories(dir);
            const auto cache = enhanced_images(*ds, retained, fcfg.enhance, threads);
            for (const auto& p : retained) {
                const auto stem = "pair_" + std::to_string(p.i) + "_" + std::to_string(p.j);
                write_pgm(differential_image(cache.at(p.i), cache.at(p.j)), (dir / (stem + ".pgm")).string(),
                          (dir / (stem + "_mask.pgm")).string());
            }
            summary.artifacts.push_back("images");
        }
        if (ds->annotations) {
            const auto labels = labels_from_envelopes(*ds->annotations, t.keys);
            const auto split = split_labels(labels, cfg.train_fraction, cfg.split_seed);
            std::vector<LabelRow> rows;
            for (std::size_t k = 0; k < t.keys.size(); ++k) rows.push_back({t.keys[k], labels[k], split[k]});
            write_labels_csv(artifact("labels.csv"), rows, prov);
            label_rows = std::move(rows);
        }
        table = std::move(t);
    }
    auto need_table = [&]() -> const FeatureTable& {
        if (!table) table = read_features_csv((out / "features.csv").string());
        return *table;
    };

    // train
    std::optional<KernelNbModel> model;
    if (cfg.has_stage("train")) {
        if (!label_rows) {
            const auto p = out / "labels.csv";
            if (!fs::exists(p)) throw DataError("training needs labelled pairs; the dataset has no annotations");
            label_rows = read_labels_csv(p.string());
        }
        const auto& t = need_table();
        nlohmann::json mj;
        const auto trained = train_from_table(t, *label_rows, cfg, threads, mj);
        model = trained;
        stamp(mj, prov, "model");
        write_json_file(artifact("model.json"), mj);
    }

    // classify + assemble
    if (cfg.has_stage("classify")) {
        if (!model) {
            const auto j = read_json_file((out / "model.json").string());
            expect_kind(j, "model", (out / "model.json").string());
            model = model_from_json(j.at("model"));
        }
        const auto& pa = need_pairs();
        const auto& t = need_table();
        std::set<PairKey> train_keys;
        if (!label_rows && fs::exists(out / "labels.csv")) label_rows = read_labels_csv((out / "labels.csv").string());
        if (label_rows) {
            for (const auto& r : *label_rows) {
                if (r.split == Split::Train) train_keys.insert(r.key);
            }
        }
        const auto res = classify_stage(pa, t, *model, train_keys, cfg);
        detail::log(cfg, "assembled " + std::to_string(res.envelopes.envelopes.size()) + " envelopes");
        write_json_file(artifact("result.json"), result_json(res, prov, "deisolab"));
        {
            auto hist = text::open_out(artifact("histogram.csv"));
            hist << csv_stamp(prov) << "length,count\n";
            for (const auto& [len, count] : res.envelopes.histogram) hist << len << ',' << count << '\n';
        }
        if (cfg.baseline) {
            ResultArtifact base;
            base.pairs = baseline_tve(*ds, pa.pairs, {cfg.baseline_tolerance, cfg.baseline_max_error, 1});
            base.split = res.split;
            base.envelopes = assemble_envelopes(base.pairs, cfg.assembly_tolerance);
            write_json_file(artifact("baseline_result.json"), result_json(base, prov, "baseline_tve"));
        }
    }

    // evaluate
    if (cfg.has_stage("evaluate")) {
        if (!ds->annotations) throw DataError("evaluation needs an annotated dataset");
        auto score = [&](const std::string& name) {
            const auto p = (out / name).string();
            const auto res = result_from_json(read_json_file(p), p);
            return evaluate_labels(res.keys, res.labels, res.split, *ds->annotations);
        };
        nlohmann::json rep;
        summary.evaluation = score("result.json");
        rep["deisolab"] = evaluation_json(*summary.evaluation);
        if (cfg.baseline && fs::exists(out / "baseline_result.json")) {
            summary.baseline = score("baseline_result.json");
            rep["baseline_tve"] = evaluation_json(*summary.baseline);
        }
        rep["universe"] = "candidate pairs not used for training";
        const auto& pa = need_pairs();
        std::size_t kept = 0;
        for (bool b : pa.retained) kept += b;
        const ReductionReport red{pa.pairs.size(), kept};
        rep["reduction"] = {{"input_pairs", red.input_pairs},
                            {"retained_pairs", red.retained_pairs},
                            {"reduction_percent", red.reduction_percent()}};
        stamp(rep, prov, "report");
        write_json_file(artifact("report.json"), rep);
        const auto& m = summary.evaluation->metrics;
        detail::log(cfg, "balanced accuracy " + (m.balanced_accuracy.defined() ? render_percent(*m.balanced_accuracy.value) : std::string("n/a")) + "%");
    }
    guard.commit();
    return summary;
}

} // namespace deisolab
