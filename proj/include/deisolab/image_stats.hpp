#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "deisolab/error.hpp"
#include "deisolab/ion_image.hpp"
#include "deisolab/stats.hpp"

namespace deisolab {

struct ImageStats {
    double mean = 0.0;
    double std = 0.0;
    double variance = 0.0;
    double moment = 0.0; // third central moment
    double median = 0.0;
    double iqr = 0.0;
    double cv = 0.0;
};

/// Population statistics over the unmasked pixels.
inline ImageStats image_stats(const IonImage& img) {
    auto v = img.valid_values();
    if (v.empty()) throw DataError("image_stats: image has no unmasked pixels");
    ImageStats s;
    s.mean = stats::mean(v);
    double m2 = 0.0, m3 = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    const auto n = static_cast<double>(v.size());
    s.variance = m2 / n;
    s.moment = m3 / n;
    s.std = std::sqrt(s.variance);
    std::sort(v.begin(), v.end());
    s.median = stats::quantile_sorted(v, 0.5);
    s.iqr = stats::quantile_sorted(v, 0.75) - stats::quantile_sorted(v, 0.25);
    s.cv = s.mean != 0.0 ? s.std / s.mean : 0.0;
    return s;
}

/// Pearson correlation of the unmasked pixels of two images; 0 if either is flat.
inline double cross_correlation(const IonImage& a, const IonImage& b) {
    if (a.width != b.width || a.height != b.height) throw DataError("cross_correlation: image sizes differ");
    if (a.valid != b.valid) throw DataError("cross_correlation: masks differ");
    return stats::pearson(a.valid_values(), b.valid_values());
}

/// Pearson correlation between the image and itself shifted by (dy, dx), over
/// positions where both pixels are measured. 0 when either side is flat.
inline double autocorrelation(const IonImage& img, int dy = 0, int dx = 1) {
    std::vector<double> head, tail;
    for (int y = 0; y < img.height; ++y) {
        const int y2 = y + dy;
        if (y2 < 0 || y2 >= img.height) continue;
        for (int x = 0; x < img.width; ++x) {
            const int x2 = x + dx;
            if (x2 < 0 || x2 >= img.width) continue;
            if (!img.is_valid(x, y) || !img.is_valid(x2, y2)) continue;
            head.push_back(img.at(x, y));
            tail.push_back(img.at(x2, y2));
        }
    }
    if (head.size() < 2) throw DataError("autocorrelation: fewer than 2 lagged pixel pairs");
    return stats::pearson(head, tail);
}

} // namespace deisolab
