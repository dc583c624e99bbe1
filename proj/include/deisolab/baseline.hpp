#pragma once

// Intensity-only isotope matching (theoretical vs experimental): a second
// method for comparative runs. Spatial information is ignored.

#include <cmath>
#include <span>
#include <vector>

#include "deisolab/classify.hpp"
#include "deisolab/synthgen.hpp"

namespace deisolab {

struct BaselineConfig {
    double tolerance = kAssemblyTolerance; // on |m - 1.003/z|
    double max_relative_error = 0.5;
    int charge = 1;
};

/// Mean abundance of every component over the measured pixels.
inline std::vector<double> mean_abundances(const Dataset& ds) {
    std::vector<double> out(ds.component_count(), 0.0);
    const auto rows = ds.abundance.rows();
    for (std::size_t c = 0; c < out.size(); ++c) {
        const float* col = ds.abundance.column(c);
        double acc = 0.0;
        for (std::size_t p = 0; p < rows; ++p) acc += col[p];
        out[c] = rows ? acc / static_cast<double>(rows) : 0.0;
    }
    return out;
}

/// Envelope iff the spacing is one isotope step and I_j / I_i is within the
/// relative-error bound of the Poisson ratio predicted for a monoisotopic
/// peak at mu_i.
inline std::vector<ClassifiedPair> baseline_tve(const Dataset& ds, std::span<const PeakPair> pairs,
                                                const BaselineConfig& cfg = {}) {
    if (!(cfg.tolerance > 0.0) || !(cfg.max_relative_error > 0.0) || cfg.charge < 1) {
        throw ConfigError("baseline: tolerance, relative-error bound and charge must be positive");
    }
    const auto intensity = mean_abundances(ds);
    const double step = kIsotopeSpacing / cfg.charge;
    std::vector<ClassifiedPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        ClassifiedPair c{p, PairLabel::NonEnvelope, 0.0, false};
        const double ii = intensity[static_cast<std::size_t>(p.i)];
        if (std::abs(p.m - step) <= cfg.tolerance && ii > 0.0) {
            const auto env = poisson_envelope(ds.components[static_cast<std::size_t>(p.i)].mu, cfg.charge, 2);
            const double predicted = env[1].intensity / env[0].intensity;
            const double observed = intensity[static_cast<std::size_t>(p.j)] / ii;
            if (std::abs(observed - predicted) <= cfg.max_relative_error * predicted) {
                c.label = PairLabel::Envelope;
                c.posterior = 1.0;
            }
        }
        out.push_back(c);
    }
    return out;
}

} // namespace deisolab
