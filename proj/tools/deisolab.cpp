// deisolab command-line entry point.

#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deisolab/deisolab.hpp"

namespace fs = std::filesystem;
using namespace deisolab;
using nlohmann::json;

namespace {

std::string flag_for(const std::string& key) {
    std::string f = "--" + key;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

/// Options bound to config-struct members. After parsing, only the options
/// that were given on the command line override the config-file values.
class Overrides {
public:
    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& key, T& target, const std::string& help) {
        auto* o = app->add_option(flag_for(key), target, help)->capture_default_str();
        items_.push_back({o, key});
        return o;
    }

    template <class T>
    CLI::Option* add_list(CLI::App* app, const std::string& key, std::vector<T>& target, const std::string& help) {
        auto* o = app->add_option(flag_for(key), target, help)->delimiter(',')->capture_default_str();
        items_.push_back({o, key});
        return o;
    }

    json merge(json base, const json& cli) const {
        for (const auto& [opt, key] : items_) {
            if (opt->count() > 0) base[key] = cli.at(key);
        }
        return base;
    }

private:
    struct Item {
        CLI::Option* opt;
        std::string key;
    };
    std::vector<Item> items_;
};

std::string help_of(const std::string& key) {
    for (const auto& f : pipeline_config_fields()) {
        if (f.key == key) return f.help;
    }
    return {};
}

/// Binds the named PipelineConfig fields as options.
void bind_pipeline(CLI::App* app, Overrides& ov, PipelineConfig& c, const std::vector<std::string>& keys) {
    for (const auto& k : keys) {
        const auto h = help_of(k);
#define DEISOLAB_BIND(name)                                                                                            \
    if (k == #name) {                                                                                                  \
        ov.add(app, k, c.name, h);                                                                                     \
        continue;                                                                                                      \
    }
        DEISOLAB_BIND(in)
        DEISOLAB_BIND(out)
        DEISOLAB_BIND(synth_config)
        DEISOLAB_BIND(threads)
        DEISOLAB_BIND(verbose)
        DEISOLAB_BIND(window_da)
        DEISOLAB_BIND(k_neighbors)
        DEISOLAB_BIND(s_ratio)
        DEISOLAB_BIND(fis_config)
        DEISOLAB_BIND(threshold_mode)
        DEISOLAB_BIND(threshold)
        DEISOLAB_BIND(k_max)
        DEISOLAB_BIND(elbow_fraction)
        DEISOLAB_BIND(gmm_seed)
        DEISOLAB_BIND(equalize)
        DEISOLAB_BIND(median_filter)
        DEISOLAB_BIND(normalize)
        DEISOLAB_BIND(histogram_bins)
        DEISOLAB_BIND(glcm_levels)
        DEISOLAB_BIND(glcm_range)
        DEISOLAB_BIND(glcm_symmetric)
        DEISOLAB_BIND(entropy_base)
        DEISOLAB_BIND(save_images)
        DEISOLAB_BIND(select_features)
        DEISOLAB_BIND(priors)
        DEISOLAB_BIND(bandwidth_rule)
        DEISOLAB_BIND(decision_threshold)
        DEISOLAB_BIND(train_fraction)
        DEISOLAB_BIND(split_seed)
        DEISOLAB_BIND(cv_folds)
        DEISOLAB_BIND(cv_repeats)
        DEISOLAB_BIND(cv_seed)
        DEISOLAB_BIND(assembly_tolerance)
        DEISOLAB_BIND(baseline)
        DEISOLAB_BIND(baseline_tolerance)
        DEISOLAB_BIND(baseline_max_error)
#undef DEISOLAB_BIND
        if (k == "stages") {
            ov.add_list(app, k, c.stages, h);
        } else if (k == "features") {
            ov.add_list(app, k, c.features, h);
        } else {
            throw std::logic_error("unbound config field " + k);
        }
    }
}

PipelineConfig resolve_pipeline(const std::string& config_path, const Overrides& ov, const PipelineConfig& cli) {
    json base = config_path.empty() ? config_json(PipelineConfig{}) : read_json_file(config_path);
    return config_from_json(ov.merge(base, config_json(cli)));
}

const std::vector<std::string> kPreselectKeys{"in",    "window_da", "k_neighbors",    "s_ratio",  "fis_config",
                                              "threshold_mode", "threshold", "k_max", "elbow_fraction",
                                              "gmm_seed", "threads",   "verbose"};
const std::vector<std::string> kImagingKeys{"equalize",    "median_filter",  "normalize",    "histogram_bins",
                                            "glcm_levels", "glcm_range",     "glcm_symmetric", "entropy_base"};
const std::vector<std::string> kTrainKeys{"select_features", "priors",  "bandwidth_rule", "decision_threshold", "cv_folds",
                                          "cv_repeats",      "cv_seed", "threads",        "verbose"};

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Dataset load_input(const std::string& in) {
    if (in.empty()) throw ConfigError("--in is required");
    return load_dataset(manifest_path_for(in)).dataset;
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::vector<Envelope> load_truth(const std::string& path) {
    const fs::path p(path);
    if (fs::is_directory(p) || p.filename() == "manifest.json") {
        auto ds = load_dataset(manifest_path_for(path)).dataset;
        if (!ds.annotations) throw DataError("'" + path + "' has no annotations");
        return *ds.annotations;
    }
    return ground_truth_from_json(read_json_file(path)).envelopes;
}

// ---- subcommands -----------------------------------------------------------

struct GenerateArgs {
    SynthConfig synth;
    Overrides ov;
    std::string config;
    std::string out;
    std::string format = "binary";
    int threads = 1;
};

void setup_generate(CLI::App& app, GenerateArgs& a) {
    auto* sub = app.add_subcommand("generate", "write a seeded synthetic dataset with ground truth");
    sub->add_option("--config", a.config, "synthetic-data config (JSON); flags override it");
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_option("--format", a.format, "abundance matrix format: binary|csv")->capture_default_str();
    sub->add_option("--threads", a.threads, "worker threads")->capture_default_str();
    auto& s = a.synth;
    a.ov.add(sub, "seed", s.seed, "master seed");
    a.ov.add(sub, "width", s.width, "raster width [pixels]");
    a.ov.add(sub, "height", s.height, "raster height [pixels]");
    a.ov.add(sub, "outline", s.outline, "tissue outline: full|ellipse");
    a.ov.add(sub, "n_analytes", s.n_analytes, "number of isotopic envelopes");
    a.ov.add(sub, "n_decoys", s.n_decoys, "number of unrelated components");
    a.ov.add(sub, "n_components", s.n_components, "if > 0, decoys fill up to this many components");
    a.ov.add(sub, "mass_min", s.mass_min, "lowest monoisotopic mass [Da]");
    a.ov.add(sub, "mass_max", s.mass_max, "highest monoisotopic mass [Da]");
    a.ov.add(sub, "charge", s.charge, "charge state");
    a.ov.add(sub, "pattern", s.pattern, "spatial patterns: blobs|regions|mixed");
    a.ov.add(sub, "region_probability", s.region_probability, "share of region patterns in mixed mode");
    a.ov.add(sub, "noise_sigma", s.noise_sigma, "multiplicative per-pixel noise");
    a.ov.add(sub, "sigma_base", s.sigma_base, "component width [Da]");
    a.ov.add(sub, "sigma_jitter", s.sigma_jitter, "relative width jitter");
    a.ov.add(sub, "mu_jitter", s.mu_jitter, "location jitter bound [Da]");
    a.ov.add(sub, "overlap_fraction", s.overlap_fraction, "share of envelopes interleaved with a neighbour");
    a.ov.add(sub, "min_separation", s.min_separation, "minimum spacing of component locations [Da]");
    a.ov.add(sub, "annotate", s.annotate, "store the ground truth as annotations");
    sub->callback([&a] {
        json base = a.config.empty() ? json(SynthConfig{}) : read_json_file(a.config);
        SynthConfig cfg;
        from_json(a.ov.merge(base, json(a.synth)), cfg);
        if (a.format != "binary" && a.format != "csv") throw ConfigError("--format must be binary|csv");
        const auto gen = generate(cfg, static_cast<unsigned>(std::max(1, a.threads)));
        save_dataset(gen.dataset, a.out, a.format == "csv" ? MatrixFormat::Csv : MatrixFormat::Binary);
        write_json_file((fs::path(a.out) / "ground_truth.json").string(), ground_truth_json(gen.truth));
        write_json_file((fs::path(a.out) / "synth_config.json").string(), json(cfg));
        std::cerr << "[deisolab] wrote " << gen.dataset.component_count() << " components to " << a.out << '\n';
    });
}

struct PipelineArgs {
    PipelineConfig cfg;
    Overrides ov;
    std::string config;
};

void setup_preselect(CLI::App& app, PipelineArgs& a, std::string& out) {
    auto* sub = app.add_subcommand("preselect", "score candidate pairs and keep those above the possibility threshold");
    sub->add_option("--config", a.config, "pipeline config (JSON); flags override it");
    sub->add_option("--out", out, "pairs.json to write")->required();
    bind_pipeline(sub, a.ov, a.cfg, kPreselectKeys);
    sub->callback([&a, &out] {
        const auto cfg = resolve_pipeline(a.config, a.ov, a.cfg);
        const auto ds = load_input(cfg.in);
        const auto pa = preselect_stage(ds, cfg);
        ensure_parent(out);
        write_json_file(out, pairs_json(pa, {config_hash(cfg), kToolVersion}));
    });
}

struct FeaturesArgs {
    PipelineArgs p;
    std::string pairs, out, images, labels;
};

void setup_features(CLI::App& app, FeaturesArgs& a) {
    auto* sub = app.add_subcommand("features", "extract the 17 image descriptors of retained pairs");
    sub->add_option("--config", a.p.config, "pipeline config (JSON); flags override it");
    sub->add_option("--pairs", a.pairs, "pairs.json from preselect")->required();
    sub->add_option("--out", a.out, "features.csv to write")->required();
    sub->add_option("--save-images", a.images, "directory for differential-image PGM dumps");
    sub->add_option("--labels", a.labels, "also write labels.csv with a train/test split (annotated datasets)");
    bind_pipeline(sub, a.p.ov, a.p.cfg, concat({{"in", "threads", "verbose", "train_fraction", "split_seed"}, kImagingKeys}));
    sub->callback([&a] {
        const auto cfg = resolve_pipeline(a.p.config, a.p.ov, a.p.cfg);
        const Provenance prov{config_hash(cfg), kToolVersion};
        const auto ds = load_input(cfg.in);
        const auto pa = pairs_from_json(read_json_file(a.pairs), a.pairs);
        const auto retained = retained_pairs(pa);
        const auto fcfg = cfg.feature_config();
        const auto vecs = extract_features(ds, retained, fcfg, static_cast<unsigned>(cfg.threads));
        ensure_parent(a.out);
        write_features_csv(a.out, retained, vecs, prov);
        if (!a.images.empty()) {
            fs::create_directories(a.images);
            const auto cache = enhanced_images(ds, retained, fcfg.enhance, static_cast<unsigned>(cfg.threads));
            for (const auto& p : retained) {
                const auto stem = (fs::path(a.images) / ("pair_" + std::to_string(p.i) + "_" + std::to_string(p.j))).string();
                write_pgm(differential_image(cache.at(p.i), cache.at(p.j)), stem + ".pgm", stem + "_mask.pgm");
            }
        }
        if (!a.labels.empty()) {
            if (!ds.annotations) throw DataError("--labels needs an annotated dataset");
            std::vector<PairKey> keys;
            for (const auto& p : retained) keys.push_back(p.key());
            const auto labels = labels_from_envelopes(*ds.annotations, keys);
            const auto split = split_labels(labels, cfg.train_fraction, cfg.split_seed);
            std::vector<LabelRow> rows;
            for (std::size_t k = 0; k < keys.size(); ++k) rows.push_back({keys[k], labels[k], split[k]});
            ensure_parent(a.labels);
            write_labels_csv(a.labels, rows, prov);
        }
    });
}

struct TrainArgs {
    PipelineArgs p;
    std::string features, labels, out;
};

void setup_train(CLI::App& app, TrainArgs& a) {
    auto* sub = app.add_subcommand("train", "fit the kernel naive Bayes classifier");
    sub->add_option("--config", a.p.config, "pipeline config (JSON); flags override it");
    sub->add_option("--features", a.features, "features.csv")->required();
    sub->add_option("--labels", a.labels, "labels.csv (rows with split=test are ignored)")->required();
    sub->add_option("--out", a.out, "model.json to write")->required();
    a.p.ov.add_list(sub, "feature_list", a.p.cfg.features, help_of("features"));
    bind_pipeline(sub, a.p.ov, a.p.cfg, kTrainKeys);
    sub->callback([&a] {
        auto merged = a.p.ov.merge(a.p.config.empty() ? config_json(PipelineConfig{}) : read_json_file(a.p.config),
                                   [&] {
                                       auto j = config_json(a.p.cfg);
                                       j["feature_list"] = a.p.cfg.features;
                                       return j;
                                   }());
        if (merged.contains("feature_list")) {
            merged["features"] = merged["feature_list"];
            merged.erase("feature_list");
        }
        const auto cfg = config_from_json(merged);
        const auto table = read_features_csv(a.features);
        const auto rows = read_labels_csv(a.labels);
        json mj;
        train_from_table(table, rows, cfg, static_cast<unsigned>(cfg.threads), mj);
        stamp(mj, {config_hash(cfg), kToolVersion}, "model");
        ensure_parent(a.out);
        write_json_file(a.out, mj);
    });
}

struct ClassifyArgs {
    PipelineArgs p;
    std::string model, pairs, features, labels, out, baseline_out;
};

void setup_classify(CLI::App& app, ClassifyArgs& a) {
    auto* sub = app.add_subcommand("classify", "label every candidate pair and assemble envelopes");
    sub->add_option("--config", a.p.config, "pipeline config (JSON); flags override it");
    sub->add_option("--model", a.model, "model.json from train")->required();
    sub->add_option("--out", a.out, "result.json to write")->required();
    sub->add_option("--pairs", a.pairs, "pairs.json (computed from --in when omitted)");
    sub->add_option("--features", a.features, "features.csv of the retained pairs (computed when omitted)");
    sub->add_option("--labels", a.labels, "labels.csv; its training rows are marked split=train");
    sub->add_option("--baseline-out", a.baseline_out, "also write the intensity-only baseline result here");
    bind_pipeline(sub, a.p.ov, a.p.cfg,
                  concat({kPreselectKeys, kImagingKeys, {"assembly_tolerance", "baseline_tolerance", "baseline_max_error"}}));
    sub->callback([&a] {
        const auto cfg = resolve_pipeline(a.p.config, a.p.ov, a.p.cfg);
        const Provenance prov{config_hash(cfg), kToolVersion};
        const auto ds = load_input(cfg.in);
        const auto mj = read_json_file(a.model);
        expect_kind(mj, "model", a.model);
        const auto model = model_from_json(mj.at("model"));
        const auto pa = a.pairs.empty() ? preselect_stage(ds, cfg) : pairs_from_json(read_json_file(a.pairs), a.pairs);
        FeatureTable table;
        if (!a.features.empty()) {
            table = read_features_csv(a.features);
        } else {
            const auto retained = retained_pairs(pa);
            table.vectors = extract_features(ds, retained, cfg.feature_config(), static_cast<unsigned>(cfg.threads));
            for (const auto& p : retained) table.keys.push_back(p.key());
        }
        std::set<PairKey> train_keys;
        if (!a.labels.empty()) {
            for (const auto& r : read_labels_csv(a.labels)) {
                if (r.split == Split::Train) train_keys.insert(r.key);
            }
        }
        const auto res = classify_stage(pa, table, model, train_keys, cfg);
        ensure_parent(a.out);
        write_json_file(a.out, result_json(res, prov, "deisolab"));
        if (!a.baseline_out.empty()) {
            ResultArtifact base;
            base.pairs = baseline_tve(ds, pa.pairs, {cfg.baseline_tolerance, cfg.baseline_max_error, 1});
            base.split = res.split;
            base.envelopes = assemble_envelopes(base.pairs, cfg.assembly_tolerance);
            ensure_parent(a.baseline_out);
            write_json_file(a.baseline_out, result_json(base, prov, "baseline_tve"));
        }
    });
}

struct EvaluateArgs {
    std::string pred, truth, out;
};

void setup_evaluate(CLI::App& app, EvaluateArgs& a) {
    auto* sub = app.add_subcommand("evaluate", "confusion-matrix metrics of a result against ground truth");
    sub->add_option("--pred", a.pred, "result.json")->required();
    sub->add_option("--truth", a.truth, "ground_truth.json, or an annotated dataset directory")->required();
    sub->add_option("--out", a.out, "report.json to write")->required();
    sub->callback([&a] {
        const auto res = result_from_json(read_json_file(a.pred), a.pred);
        const auto truth = load_truth(a.truth);
        const auto ev = evaluate_labels(res.keys, res.labels, res.split, truth);
        json rep = {{res.method, evaluation_json(ev)}, {"universe", "candidate pairs not used for training"}};
        stamp(rep, {}, "report");
        ensure_parent(a.out);
        write_json_file(a.out, rep);
        const auto& m = ev.metrics;
        std::cout << "balanced_accuracy "
                  << (m.balanced_accuracy.defined() ? render_percent(*m.balanced_accuracy.value) : "n/a") << "\n";
    });
}

struct CompareArgs {
    std::vector<std::string> pred, names;
    std::string truth, out;
};

void setup_compare(CLI::App& app, CompareArgs& a) {
    auto* sub = app.add_subcommand("compare", "set-intersection report of several labelings of one pair universe");
    sub->add_option("--pred", a.pred, "result.json files")->required();
    sub->add_option("--names", a.names, "display names, one per --pred file (default: method field)");
    sub->add_option("--truth", a.truth, "add the ground truth (ground_truth.json or dataset) as a labeling");
    sub->add_option("--out", a.out, "venn.json to write")->required();
    sub->callback([&a] {
        if (!a.names.empty() && a.names.size() != a.pred.size()) throw ConfigError("--names needs one name per --pred file");
        std::vector<LabelSet> sets;
        for (std::size_t k = 0; k < a.pred.size(); ++k) {
            const auto r = result_from_json(read_json_file(a.pred[k]), a.pred[k]);
            sets.push_back({a.names.empty() ? r.method : a.names[k], r.keys, r.labels});
        }
        if (!a.truth.empty()) {
            const auto truth = load_truth(a.truth);
            sets.push_back({"truth", sets.front().keys, labels_from_envelopes(truth, sets.front().keys)});
        }
        const auto rep = compare_label_sets(std::move(sets));
        json j = intersection_json(rep);
        stamp(j, {}, "comparison");
        ensure_parent(a.out);
        write_json_file(a.out, j);
        std::cout << "common_nE " << rep.common_non_envelope << " of " << rep.universe << " ("
                  << render_percent(rep.intersection_fraction) << "%)\n";
    });
}

void setup_run(CLI::App& app, PipelineArgs& a) {
    auto* sub = app.add_subcommand("run", "run the whole pipeline (or the stages named by --stages)");
    sub->add_option("--config", a.config, "pipeline config (JSON); every flag overrides it");
    std::vector<std::string> keys;
    for (const auto& f : pipeline_config_fields()) keys.push_back(f.key);
    bind_pipeline(sub, a.ov, a.cfg, keys);
    sub->callback([&a] {
        const auto cfg = resolve_pipeline(a.config, a.ov, a.cfg);
        const auto summary = run_pipeline(cfg);
        if (summary.evaluation) {
            const auto& m = summary.evaluation->metrics;
            std::cout << "balanced_accuracy "
                      << (m.balanced_accuracy.defined() ? render_percent(*m.balanced_accuracy.value) : "n/a") << "\n";
        }
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deisolab: isotopic envelope detection for imaging mass spectrometry"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    GenerateArgs gen;
    PipelineArgs pre;
    std::string pre_out;
    FeaturesArgs feat;
    TrainArgs train;
    ClassifyArgs cls;
    EvaluateArgs eval;
    CompareArgs cmp;
    PipelineArgs run;
    setup_generate(app, gen);
    setup_preselect(app, pre, pre_out);
    setup_features(app, feat);
    setup_train(app, train);
    setup_classify(app, cls);
    setup_evaluate(app, eval);
    setup_compare(app, cmp);
    setup_run(app, run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorKind::Config);
    } catch (const Error& e) {
        std::cerr << "deisolab: error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "deisolab: internal error: " << e.what() << '\n';
        return exit_code(ErrorKind::Internal);
    }
    return 0;
}
