#pragma once

// Seeded generator of synthetic imaging datasets with known envelope ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/parallel.hpp"
#include "deisolab/random.hpp"
#include "deisolab/types.hpp"
#include "deisolab/version.hpp"

namespace deisolab {

// Averagine: one "average residue" of 111.1254 Da carries 4.9384 carbons;
// 1.07 % of carbon is 13C.
inline constexpr double kAveragineResidueMass = 111.1254;
inline constexpr double kAveragineCarbons = 4.9384;
inline constexpr double kCarbon13Abundance = 0.0107;

struct IsotopePeak {
    double mu = 0.0;
    double intensity = 0.0; // relative, max == 1
};

/// Expected number of 13C atoms for a peptide of the given mass.
inline double poisson_lambda(double mass) {
    return mass / kAveragineResidueMass * kAveragineCarbons * kCarbon13Abundance;
}

/// Poisson isotope envelope: peaks spaced 1.003/z Da with intensities
/// proportional to exp(-lambda) lambda^k / k!, scaled so the largest is 1.
inline std::vector<IsotopePeak> poisson_envelope(double monoisotopic_mass, int z, int length) {
    if (!(monoisotopic_mass > 0.0) || !std::isfinite(monoisotopic_mass)) {
        throw ConfigError("poisson_envelope: mass must be positive");
    }
    if (z < 1) throw ConfigError("poisson_envelope: charge must be >= 1");
    if (length < 1) throw ConfigError("poisson_envelope: length must be >= 1");
    const double lambda = poisson_lambda(monoisotopic_mass);
    std::vector<IsotopePeak> out(static_cast<std::size_t>(length));
    // log-space keeps large k stable; exp(-lambda) cancels in the normalization.
    double max_log = -1e300;
    std::vector<double> logs(out.size());
    for (int k = 0; k < length; ++k) {
        logs[k] = k * std::log(lambda) - std::lgamma(k + 1.0);
        max_log = std::max(max_log, logs[k]);
    }
    for (int k = 0; k < length; ++k) {
        out[k].mu = monoisotopic_mass + k * kIsotopeSpacing / z;
        out[k].intensity = std::exp(logs[k] - max_log);
    }
    return out;
}

struct SynthConfig {
    std::uint64_t seed = 1;
    int width = 64;
    int height = 64;
    std::string outline = "full"; // full | ellipse
    int n_analytes = 20;
    int n_decoys = 100;
    int n_components = 0; // > 0: decoys fill up to exactly this many components
    double mass_min = 800.0;
    double mass_max = 3000.0;
    int charge = 1;
    std::map<int, double> envelope_length_weights = {{2, 0.5}, {3, 0.25}, {4, 0.15}, {5, 0.1}};
    std::string pattern = "mixed"; // blobs | regions | mixed
    double region_probability = 0.3;
    double noise_sigma = 0.1;
    double sigma_base = 0.08;
    double sigma_jitter = 0.05;
    double mu_jitter = 0.005;
    double overlap_fraction = 0.0;
    double min_separation = 0.02;
    bool annotate = true;

    void validate() const {
        if (width <= 0 || height <= 0) throw ConfigError("synth: grid width/height must be positive");
        if (outline != "full" && outline != "ellipse") throw ConfigError("synth: outline must be full|ellipse");
        if (n_analytes < 0 || n_decoys < 0 || n_components < 0) throw ConfigError("synth: counts must be >= 0");
        if (!(mass_min > 0.0) || !(mass_max > mass_min)) throw ConfigError("synth: mass range must be positive and ordered");
        if (charge < 1) throw ConfigError("synth: charge must be >= 1");
        if (envelope_length_weights.empty()) throw ConfigError("synth: envelope length distribution is empty");
        double total = 0.0;
        for (auto [len, w] : envelope_length_weights) {
            if (len < 2) throw ConfigError("synth: envelope lengths must be >= 2");
            if (w < 0.0) throw ConfigError("synth: envelope length weights must be >= 0");
            total += w;
        }
        if (!(total > 0.0)) throw ConfigError("synth: envelope length weights sum to zero");
        if (pattern != "blobs" && pattern != "regions" && pattern != "mixed") {
            throw ConfigError("synth: pattern must be blobs|regions|mixed");
        }
        if (region_probability < 0.0 || region_probability > 1.0) throw ConfigError("synth: region_probability in [0,1]");
        if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
        if (!(sigma_base > 0.0)) throw ConfigError("synth: sigma_base must be positive");
        if (sigma_jitter < 0.0 || sigma_jitter >= 1.0) throw ConfigError("synth: sigma_jitter in [0,1)");
        if (mu_jitter < 0.0) throw ConfigError("synth: mu_jitter must be >= 0");
        if (overlap_fraction < 0.0 || overlap_fraction > 1.0) throw ConfigError("synth: overlap_fraction in [0,1]");
        if (min_separation < 0.0) throw ConfigError("synth: min_separation must be >= 0");
    }
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
    nlohmann::json weights = nlohmann::json::object();
    for (auto [len, w] : c.envelope_length_weights) weights[std::to_string(len)] = w;
    j = {{"seed", c.seed},
         {"width", c.width},
         {"height", c.height},
         {"outline", c.outline},
         {"n_analytes", c.n_analytes},
         {"n_decoys", c.n_decoys},
         {"n_components", c.n_components},
         {"mass_min", c.mass_min},
         {"mass_max", c.mass_max},
         {"charge", c.charge},
         {"envelope_length_weights", weights},
         {"pattern", c.pattern},
         {"region_probability", c.region_probability},
         {"noise_sigma", c.noise_sigma},
         {"sigma_base", c.sigma_base},
         {"sigma_jitter", c.sigma_jitter},
         {"mu_jitter", c.mu_jitter},
         {"overlap_fraction", c.overlap_fraction},
         {"min_separation", c.min_separation},
         {"annotate", c.annotate}};
}

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
    if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
    nlohmann::json defaults = SynthConfig{};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!defaults.contains(it.key())) throw ConfigError("synth config: unknown key '" + it.key() + "'");
    }
    try {
        c.seed = j.value("seed", c.seed);
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        c.outline = j.value("outline", c.outline);
        c.n_analytes = j.value("n_analytes", c.n_analytes);
        c.n_decoys = j.value("n_decoys", c.n_decoys);
        c.n_components = j.value("n_components", c.n_components);
        c.mass_min = j.value("mass_min", c.mass_min);
        c.mass_max = j.value("mass_max", c.mass_max);
        c.charge = j.value("charge", c.charge);
        if (j.contains("envelope_length_weights")) {
            c.envelope_length_weights.clear();
            for (auto it = j["envelope_length_weights"].begin(); it != j["envelope_length_weights"].end(); ++it) {
                c.envelope_length_weights[std::stoi(it.key())] = it.value().get<double>();
            }
        }
        c.pattern = j.value("pattern", c.pattern);
        c.region_probability = j.value("region_probability", c.region_probability);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.sigma_base = j.value("sigma_base", c.sigma_base);
        c.sigma_jitter = j.value("sigma_jitter", c.sigma_jitter);
        c.mu_jitter = j.value("mu_jitter", c.mu_jitter);
        c.overlap_fraction = j.value("overlap_fraction", c.overlap_fraction);
        c.min_separation = j.value("min_separation", c.min_separation);
        c.annotate = j.value("annotate", c.annotate);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError("synth config: envelope length keys must be integers");
    }
    c.validate();
}

struct GroundTruth {
    std::vector<Envelope> envelopes; // mu-ordered member ids

    bool operator==(const GroundTruth&) const = default;
};

inline nlohmann::json ground_truth_json(const GroundTruth& gt) {
    return {{"format_version", kFormatVersion}, {"envelopes", gt.envelopes}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("envelopes")) throw DataError("ground truth JSON needs an 'envelopes' array");
    GroundTruth gt;
    try {
        gt.envelopes = j["envelopes"].get<std::vector<Envelope>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ground truth JSON: ") + e.what());
    }
    return gt;
}

struct GeneratedDataset {
    Dataset dataset;
    GroundTruth truth;
};

namespace detail {

/// Non-negative spatial intensity map on the full raster (row-major).
struct SpatialPattern {
    struct Blob {
        double cx, cy, width, amplitude;
    };
    std::vector<Blob> blobs;
    bool has_region = false;
    double nx = 0.0, ny = 0.0, offset = 0.0; // half-plane nx*x + ny*y >= offset
    double cutoff = 0.01; // intensities below this are not detected

    double at(double x, double y) const {
        double v = 0.0;
        for (const auto& b : blobs) {
            const double dx = x - b.cx, dy = y - b.cy;
            v += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.width * b.width));
        }
        if (has_region) v *= (nx * x + ny * y >= offset) ? 1.0 : 0.1;
        return v < cutoff ? 0.0 : v;
    }
};

inline SpatialPattern sample_pattern(Rng& rng, const SynthConfig& cfg) {
    SpatialPattern p;
    const double w = cfg.width, h = cfg.height;
    const double scale = std::min(w, h);
    const int n_blobs = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int b = 0; b < n_blobs; ++b) {
        p.blobs.push_back({uniform(rng, 0.0, w), uniform(rng, 0.0, h), uniform(rng, 0.08, 0.3) * scale,
                           uniform(rng, 0.3, 1.0)});
    }
    bool region = false;
    if (cfg.pattern == "regions") region = true;
    if (cfg.pattern == "mixed") region = uniform(rng, 0.0, 1.0) < cfg.region_probability;
    if (region) {
        const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        p.has_region = true;
        p.nx = std::cos(theta);
        p.ny = std::sin(theta);
        const double px = uniform(rng, 0.25 * w, 0.75 * w), py = uniform(rng, 0.25 * h, 0.75 * h);
        p.offset = p.nx * px + p.ny * py;
    }
    return p;
}

inline PixelGrid make_grid(const SynthConfig& cfg) {
    if (cfg.outline == "full") return PixelGrid::full(cfg.width, cfg.height);
    std::vector<Pixel> px;
    const double cx = (cfg.width - 1) / 2.0, cy = (cfg.height - 1) / 2.0;
    const double rx = cfg.width / 2.0, ry = cfg.height / 2.0;
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            const double dx = (x - cx) / rx, dy = (y - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) px.push_back({x, y});
        }
    }
    return PixelGrid(cfg.width, cfg.height, std::move(px));
}

/// Tracks placed m/z values and enforces the minimum separation.
class MzLedger {
public:
    explicit MzLedger(double min_sep) : min_sep_(min_sep) {}

    bool fits(double mu) const {
        auto it = placed_.lower_bound(mu);
        if (it != placed_.end() && (*it - mu) <= min_sep_) return false;
        if (it != placed_.begin() && (mu - *std::prev(it)) <= min_sep_) return false;
        return true;
    }

    bool fits_all(const std::vector<double>& mus) const {
        for (std::size_t a = 0; a < mus.size(); ++a) {
            if (!fits(mus[a])) return false;
            for (std::size_t b = a + 1; b < mus.size(); ++b) {
                if (std::abs(mus[a] - mus[b]) <= min_sep_) return false;
            }
        }
        return true;
    }

    void insert(const std::vector<double>& mus) { placed_.insert(mus.begin(), mus.end()); }

private:
    double min_sep_;
    std::set<double> placed_;
};

} // namespace detail

/// Generates a dataset whose envelope members share one spatial pattern
/// scaled by their Poisson relative intensity, plus independent decoys.
/// Identical config (including seed) gives bit-identical output for any
/// thread count.
inline GeneratedDataset generate(const SynthConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    Rng layout = substream(cfg.seed, 0);
    const double spacing = kIsotopeSpacing / cfg.charge;

    std::vector<int> lengths;
    std::vector<double> weights;
    for (auto [len, w] : cfg.envelope_length_weights) {
        lengths.push_back(len);
        weights.push_back(w);
    }
    std::discrete_distribution<int> pick_length(weights.begin(), weights.end());

    struct Analyte {
        std::vector<IsotopePeak> peaks;
        double amplitude = 1.0;
    };
    std::vector<Analyte> analytes(static_cast<std::size_t>(cfg.n_analytes));
    std::vector<int> analyte_len(analytes.size());
    int members = 0;
    for (auto& len : analyte_len) {
        len = lengths[static_cast<std::size_t>(pick_length(layout))];
        members += len;
    }
    int n_decoys = cfg.n_decoys;
    if (cfg.n_components > 0) {
        n_decoys = cfg.n_components - members;
        if (n_decoys < 0) throw ConfigError("synth: n_components is smaller than the sampled envelope members");
    }

    detail::MzLedger ledger(cfg.min_separation);
    constexpr int kMaxAttempts = 1000;
    auto members_at = [&](double mono, int len) {
        std::vector<double> mus(static_cast<std::size_t>(len));
        for (int k = 0; k < len; ++k) {
            mus[k] = mono + k * spacing + (cfg.mu_jitter > 0.0 ? uniform(layout, -cfg.mu_jitter, cfg.mu_jitter) : 0.0);
        }
        return mus;
    };
    auto mono_range_hi = [&](int len) {
        const double hi = cfg.mass_max - (len - 1) * spacing - cfg.mu_jitter;
        if (!(hi > cfg.mass_min)) throw ConfigError("synth: mass range too narrow for an envelope of length " + std::to_string(len));
        return hi;
    };

    // Overlapping analytes come in couples (a, a+1): the second starts a
    // fraction of one isotope step above the first so the members interleave.
    const int n_overlap = static_cast<int>(std::lround(cfg.overlap_fraction * cfg.n_analytes));
    std::vector<std::vector<double>> analyte_mus(analytes.size());
    for (std::size_t a = 0; a < analytes.size(); ++a) {
        const bool couple_head = static_cast<int>(a) + 1 < n_overlap && a % 2 == 0;
        const int len = analyte_len[a];
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            if (couple_head) {
                const int len_b = analyte_len[a + 1];
                const double shift = uniform(layout, 0.05, 0.2) * spacing / kIsotopeSpacing;
                const double hi = std::min(mono_range_hi(len), mono_range_hi(len_b) - shift);
                if (!(hi > cfg.mass_min)) throw ConfigError("synth: mass range too narrow for overlapping envelopes");
                const double mono = uniform(layout, cfg.mass_min, hi);
                auto mus_a = members_at(mono, len);
                auto mus_b = members_at(mono + shift, len_b);
                auto both = mus_a;
                both.insert(both.end(), mus_b.begin(), mus_b.end());
                if (ledger.fits_all(both)) {
                    ledger.insert(both);
                    analyte_mus[a] = std::move(mus_a);
                    analyte_mus[a + 1] = std::move(mus_b);
                    placed = true;
                }
            } else if (!analyte_mus[a].empty()) {
                placed = true; // second member of a couple
            } else {
                const double mono = uniform(layout, cfg.mass_min, mono_range_hi(len));
                auto mus = members_at(mono, len);
                if (ledger.fits_all(mus)) {
                    ledger.insert(mus);
                    analyte_mus[a] = std::move(mus);
                    placed = true;
                }
            }
        }
        if (!placed) throw ConfigError("synth: mass range too narrow to place analytes without duplicate mu");
    }
    for (std::size_t a = 0; a < analytes.size(); ++a) {
        const auto& mus = analyte_mus[a];
        auto ideal = poisson_envelope(mus.front(), cfg.charge, static_cast<int>(mus.size()));
        analytes[a].peaks.resize(mus.size());
        for (std::size_t k = 0; k < mus.size(); ++k) analytes[a].peaks[k] = {mus[k], ideal[k].intensity};
        analytes[a].amplitude = std::exp(normal(layout, std::log(1000.0), 1.0));
    }

    std::vector<double> decoy_mus(static_cast<std::size_t>(n_decoys));
    std::vector<double> decoy_amp(decoy_mus.size());
    for (auto& mu : decoy_mus) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            mu = uniform(layout, cfg.mass_min, cfg.mass_max);
            if (ledger.fits(mu)) {
                ledger.insert({mu});
                placed = true;
            }
        }
        if (!placed) throw ConfigError("synth: mass range too narrow to place decoys without duplicate mu");
    }
    for (auto& amp : decoy_amp) amp = std::exp(normal(layout, std::log(500.0), 1.0));

    // One pattern per analyte and per decoy, each from its own stream.
    struct Source {
        std::size_t pattern;  // index into patterns
        double mu, scale, sigma;
        int analyte = -1;
        int position = 0;
    };
    std::vector<detail::SpatialPattern> patterns;
    std::vector<Source> sources;
    for (std::size_t a = 0; a < analytes.size(); ++a) {
        Rng prng = substream(cfg.seed, 100 + a);
        patterns.push_back(detail::sample_pattern(prng, cfg));
        for (std::size_t k = 0; k < analytes[a].peaks.size(); ++k) {
            const auto& pk = analytes[a].peaks[k];
            sources.push_back({patterns.size() - 1, pk.mu, analytes[a].amplitude * pk.intensity, 0.0,
                               static_cast<int>(a), static_cast<int>(k)});
        }
    }
    for (std::size_t d = 0; d < decoy_mus.size(); ++d) {
        Rng prng = substream(cfg.seed, 1'000'000 + d);
        patterns.push_back(detail::sample_pattern(prng, cfg));
        sources.push_back({patterns.size() - 1, decoy_mus[d], decoy_amp[d], 0.0, -1, 0});
    }
    for (auto& s : sources) {
        s.sigma = cfg.sigma_base * (1.0 + (cfg.sigma_jitter > 0.0 ? uniform(layout, -cfg.sigma_jitter, cfg.sigma_jitter) : 0.0));
    }

    std::vector<std::size_t> order(sources.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sources[a].mu < sources[b].mu; });

    GeneratedDataset out;
    auto& ds = out.dataset;
    ds.grid = detail::make_grid(cfg);
    const std::size_t n_pixels = ds.grid.size();
    ds.abundance = AbundanceMatrix(n_pixels, sources.size());

    // Pattern values are shared by all members of an envelope.
    std::vector<std::vector<double>> pattern_values(patterns.size(), std::vector<double>(n_pixels));
    parallel_for(patterns.size(), threads, [&](std::size_t p) {
        const auto& px = ds.grid.pixels();
        for (std::size_t i = 0; i < n_pixels; ++i) pattern_values[p][i] = patterns[p].at(px[i].x, px[i].y);
    });

    ds.components.resize(sources.size());
    std::vector<ComponentId> id_of_source(sources.size());
    for (std::size_t k = 0; k < order.size(); ++k) id_of_source[order[k]] = static_cast<ComponentId>(k);

    parallel_for(order.size(), threads, [&](std::size_t k) {
        const auto src_index = order[k];
        const auto& src = sources[src_index];
        Rng noise = substream(cfg.seed, 10'000'000 + src_index);
        std::normal_distribution<double> eps(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
        float* col = ds.abundance.column(k);
        const auto& pv = pattern_values[src.pattern];
        double total = 0.0;
        for (std::size_t i = 0; i < n_pixels; ++i) {
            const double factor = cfg.noise_sigma > 0.0 ? std::max(0.0, 1.0 + eps(noise)) : 1.0;
            col[i] = static_cast<float>(src.scale * pv[i] * factor);
            total += col[i];
        }
        ds.components[k] = {static_cast<ComponentId>(k), src.mu, src.sigma,
                            n_pixels ? total / static_cast<double>(n_pixels) : 0.0};
    });

    for (std::size_t a = 0; a < analytes.size(); ++a) {
        Envelope env;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            if (sources[s].analyte == static_cast<int>(a)) env.push_back(id_of_source[s]);
        }
        std::sort(env.begin(), env.end());
        out.truth.envelopes.push_back(std::move(env));
    }
    std::sort(out.truth.envelopes.begin(), out.truth.envelopes.end());
    if (cfg.annotate) ds.annotations = out.truth.envelopes;
    ds.validate();
    return out;
}

} // namespace deisolab
