#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "deisolab/text.hpp"
#include "deisolab/types.hpp"

namespace deisolab {

/// Intensity map of one component over the raster. Gaps in the tissue are
/// masked and excluded from every statistic.
struct IonImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;      // row-major, size width*height
    std::vector<std::uint8_t> valid; // 1 = measured pixel

    IonImage() = default;
    IonImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0),
                             valid(static_cast<std::size_t>(w) * h, 1) {}

    std::size_t size() const noexcept { return values.size(); }
    std::size_t offset(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }
    double at(int x, int y) const noexcept { return values[offset(x, y)]; }
    bool is_valid(int x, int y) const noexcept { return valid[offset(x, y)] != 0; }

    std::size_t valid_count() const noexcept {
        return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
    }

    /// Unmasked values in raster order.
    std::vector<double> valid_values() const {
        std::vector<double> out;
        out.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (valid[i]) out.push_back(values[i]);
        }
        return out;
    }

    bool operator==(const IonImage&) const = default;
};

inline IonImage build_ion_image(const Dataset& ds, ComponentId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= ds.component_count()) {
        throw ConfigError("build_ion_image: unknown component id " + std::to_string(id));
    }
    IonImage img(ds.grid.width(), ds.grid.height());
    std::fill(img.valid.begin(), img.valid.end(), std::uint8_t{0});
    const float* col = ds.abundance.column(static_cast<std::size_t>(id));
    const auto& px = ds.grid.pixels();
    for (std::size_t p = 0; p < px.size(); ++p) {
        const auto off = img.offset(px[p].x, px[p].y);
        img.values[off] = col[p];
        img.valid[off] = 1;
    }
    return img;
}

struct EnhanceOptions {
    bool equalize = true;
    bool median = true;
    bool normalize = true;
    int bins = 256;
};

/// Histogram equalization over the unmasked pixels using `bins` uniform bins
/// between their min and max. A single-bin image maps to zero.
inline IonImage equalize_histogram(const IonImage& in, int bins = 256) {
    if (bins < 2) throw ConfigError("equalize_histogram: bins must be >= 2");
    IonImage out = in;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t n = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!in.valid[i]) continue;
        lo = std::min(lo, in.values[i]);
        hi = std::max(hi, in.values[i]);
        ++n;
    }
    if (n == 0) return out;
    auto bin_of = [&](double v) {
        if (!(hi > lo)) return 0;
        const auto b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
        return std::clamp(b, 0, bins - 1);
    };
    std::vector<std::size_t> cdf(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in.valid[i]) ++cdf[static_cast<std::size_t>(bin_of(in.values[i]))];
    }
    std::size_t cdf_min = 0;
    for (std::size_t b = 0; b < cdf.size(); ++b) {
        if (b > 0) cdf[b] += cdf[b - 1];
        if (cdf_min == 0 && cdf[b] > 0) cdf_min = cdf[b];
    }
    const double denom = static_cast<double>(n - cdf_min);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!in.valid[i]) continue;
        const auto c = cdf[static_cast<std::size_t>(bin_of(in.values[i]))];
        out.values[i] = denom > 0.0 ? static_cast<double>(c - cdf_min) / denom : 0.0;
    }
    return out;
}

/// 3x3 median over the unmasked in-bounds neighbourhood; an even count takes
/// the mean of the two middle values.
inline IonImage median_filter3(const IonImage& in) {
    IonImage out = in;
    std::array<double, 9> buf{};
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            if (!in.is_valid(x, y)) continue;
            std::size_t n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= in.width || yy >= in.height || !in.is_valid(xx, yy)) continue;
                    buf[n++] = in.at(xx, yy);
                }
            }
            std::sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
            out.values[in.offset(x, y)] = n % 2 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
        }
    }
    return out;
}

/// Min-max scaling of the unmasked pixels to [0, 1]; a flat image maps to zero.
inline IonImage normalize_min_max(const IonImage& in) {
    IonImage out = in;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!in.valid[i]) continue;
        lo = std::min(lo, in.values[i]);
        hi = std::max(hi, in.values[i]);
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!in.valid[i]) {
            out.values[i] = 0.0;
            continue;
        }
        out.values[i] = hi > lo ? (in.values[i] - lo) / (hi - lo) : 0.0;
    }
    return out;
}

/// Equalize, median-filter, normalize; each stage can be switched off.
inline IonImage enhance(const IonImage& image, const EnhanceOptions& opt = {}) {
    IonImage img = image;
    if (opt.equalize) img = equalize_histogram(img, opt.bins);
    if (opt.median) img = median_filter3(img);
    if (opt.normalize) img = normalize_min_max(img);
    return img;
}

/// Pixel-wise |a - b| of two images with identical raster and mask.
inline IonImage differential_image(const IonImage& a, const IonImage& b) {
    if (a.width != b.width || a.height != b.height) throw DataError("differential_image: image sizes differ");
    if (a.valid != b.valid) throw DataError("differential_image: masks differ");
    IonImage out = a;
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.valid[i] ? std::abs(a.values[i] - b.values[i]) : 0.0;
    return out;
}

/// Writes an 8-bit binary PGM (values clamped to [0, 1], masked pixels 0) and
/// a sidecar mask PGM (255 measured, 0 masked).
inline void write_pgm(const IonImage& img, const std::string& path, const std::string& mask_path) {
    auto write = [&](const std::string& p, auto&& pixel) {
        auto out = text::open_out(p, std::ios::out | std::ios::binary);
        out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
        for (std::size_t i = 0; i < img.size(); ++i) out.put(static_cast<char>(pixel(i)));
    };
    write(path, [&](std::size_t i) -> unsigned char {
        if (!img.valid[i]) return 0;
        return static_cast<unsigned char>(std::lround(std::clamp(img.values[i], 0.0, 1.0) * 255.0));
    });
    write(mask_path, [&](std::size_t i) -> unsigned char { return img.valid[i] ? 255 : 0; });
}

} // namespace deisolab
