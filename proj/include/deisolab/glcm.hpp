#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "deisolab/error.hpp"
#include "deisolab/ion_image.hpp"

namespace deisolab {

struct GlcmOffset {
    int dy = 0; // row step
    int dx = 1; // column step
    bool operator==(const GlcmOffset&) const = default;
};

/// How intensities are mapped onto gray levels.
///   Fixed: uniform bins over [range_lo, range_hi] (enhanced images live in [0, 1])
///   Image: uniform bins over the image's own [min, max]
enum class QuantRange { Fixed, Image };

struct GlcmOptions {
    int levels = 8;
    std::vector<GlcmOffset> offsets{{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    bool symmetric = true;
    QuantRange range = QuantRange::Fixed;
    double range_lo = 0.0;
    double range_hi = 1.0;

    void validate() const {
        if (levels < 2) throw ConfigError("glcm: levels must be >= 2");
        if (offsets.empty()) throw ConfigError("glcm: at least one offset is required");
        for (const auto& o : offsets) {
            if (o.dx == 0 && o.dy == 0) throw ConfigError("glcm: zero offset");
        }
        if (range == QuantRange::Fixed && !(range_hi > range_lo)) throw ConfigError("glcm: empty quantization range");
    }
};

struct Glcm {
    int levels = 0;
    bool symmetric = true;
    std::vector<double> p; // levels x levels, row-major, sums to 1

    double at(int i, int j) const noexcept { return p[static_cast<std::size_t>(i) * levels + j]; }
};

/// Uniform gray level of v in [lo, hi]; values at or above hi land in the top level.
inline int quantize(double v, double lo, double hi, int levels) noexcept {
    if (!(hi > lo)) return 0;
    const auto q = static_cast<int>(std::floor((v - lo) / (hi - lo) * levels));
    return std::clamp(q, 0, levels - 1);
}

inline Glcm compute_glcm(const IonImage& img, const GlcmOptions& opt = {}) {
    opt.validate();
    double lo = opt.range_lo, hi = opt.range_hi;
    if (opt.range == QuantRange::Image) {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (std::size_t i = 0; i < img.size(); ++i) {
            if (!img.valid[i]) continue;
            lo = std::min(lo, img.values[i]);
            hi = std::max(hi, img.values[i]);
        }
    }
    const int L = opt.levels;
    std::vector<int> q(img.size(), 0);
    for (std::size_t i = 0; i < img.size(); ++i) q[i] = img.valid[i] ? quantize(img.values[i], lo, hi, L) : 0;

    std::vector<double> counts(static_cast<std::size_t>(L) * L, 0.0);
    std::size_t npairs = 0;
    for (const auto& o : opt.offsets) {
        for (int y = 0; y < img.height; ++y) {
            const int y2 = y + o.dy;
            if (y2 < 0 || y2 >= img.height) continue;
            for (int x = 0; x < img.width; ++x) {
                const int x2 = x + o.dx;
                if (x2 < 0 || x2 >= img.width) continue;
                const auto a = img.offset(x, y), b = img.offset(x2, y2);
                if (!img.valid[a] || !img.valid[b]) continue;
                counts[static_cast<std::size_t>(q[a]) * L + q[b]] += 1.0;
                if (opt.symmetric) counts[static_cast<std::size_t>(q[b]) * L + q[a]] += 1.0;
                ++npairs;
            }
        }
    }
    if (npairs < 2) throw DataError("compute_glcm: fewer than 2 co-occurring pixel pairs");
    double total = 0.0;
    for (double c : counts) total += c;
    Glcm g{L, opt.symmetric, std::move(counts)};
    for (double& v : g.p) v /= total;
    return g;
}

struct GlcmMetrics {
    double contrast = 0.0;
    double homogeneity = 0.0;
    double m1 = 0.0; // dissimilarity
    double entropy = 0.0;
    double energy = 0.0;
    double correlation = 0.0;
};

inline GlcmMetrics glcm_metrics(const Glcm& g, double log_base = 2.0) {
    GlcmMetrics out;
    const int L = g.levels;
    const double log_scale = 1.0 / std::log(log_base);
    double mu_i = 0.0, mu_j = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const double p = g.at(i, j);
            const double d = i - j;
            out.contrast += p * d * d;
            out.homogeneity += p / (1.0 + std::abs(d));
            out.m1 += p * std::abs(d);
            out.energy += p * p;
            if (p > 0.0) out.entropy -= p * std::log(p) * log_scale;
            mu_i += i * p;
            mu_j += j * p;
        }
    }
    double var_i = 0.0, var_j = 0.0, cov = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const double p = g.at(i, j);
            var_i += (i - mu_i) * (i - mu_i) * p;
            var_j += (j - mu_j) * (j - mu_j) * p;
            cov += (i - mu_i) * (j - mu_j) * p;
        }
    }
    if (var_i > 0.0 && var_j > 0.0) out.correlation = std::clamp(cov / std::sqrt(var_i * var_j), -1.0, 1.0);
    return out;
}

} // namespace deisolab
