#pragma once

// One-dimensional Gaussian mixtures fitted by EM, BIC-based choice of the
// component count, and the density-crossing threshold used for preselection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "deisolab/error.hpp"
#include "deisolab/random.hpp"

namespace deisolab {

/// Used when the possibility distribution does not support a data-driven cut.
inline constexpr double kFallbackThreshold = 0.8966;

struct GmmComponent {
    double weight = 1.0;
    double mean = 0.0;
    double variance = 1.0;

    double density(double x) const noexcept {
        const double d = x - mean;
        return weight * std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
    }
};

struct Gmm1D {
    std::vector<GmmComponent> components; // sorted by mean
    double log_likelihood = 0.0;
    int iterations = 0;
    std::size_t sample_count = 0;

    std::size_t k() const noexcept { return components.size(); }

    double bic() const noexcept {
        const double params = 3.0 * static_cast<double>(k()) - 1.0;
        return -2.0 * log_likelihood + params * std::log(static_cast<double>(sample_count));
    }
};

struct GmmOptions {
    double tolerance = 1e-8; // on mean per-sample log-likelihood
    int max_iterations = 500;
    int restarts = 5;
    int restart_iterations = 40; // each restart is screened this long; the best runs to convergence
    double variance_floor = 1e-12;      // below this a component has collapsed
    double variance_regularization = 1e-6; // added to every variance in the M-step
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double variance) noexcept {
    const double d = x - mean;
    return -0.5 * (d * d / variance + std::log(2.0 * std::numbers::pi * variance));
}

/// k-means++ seeding on scalars followed by one hard assignment.
inline std::vector<GmmComponent> seed_components(std::span<const double> x, std::size_t k, Rng& rng) {
    std::vector<double> centers;
    centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
    std::vector<double> d2(x.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
            d2[i] = best;
            total += best;
        }
        if (!(total > 0.0)) {
            centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
            continue;
        }
        double target = uniform(rng, 0.0, total);
        std::size_t pick = x.size() - 1;
        for (std::size_t i = 0; i < x.size(); ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(x[pick]);
    }
    double overall_mean = 0.0;
    for (double v : x) overall_mean += v;
    overall_mean /= static_cast<double>(x.size());
    double overall_var = 0.0;
    for (double v : x) overall_var += (v - overall_mean) * (v - overall_mean);
    overall_var = std::max(overall_var / static_cast<double>(x.size()), 1e-6);

    std::vector<double> n(k, 0.0), s(k, 0.0), ss(k, 0.0);
    for (double v : x) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (std::abs(v - centers[c]) < std::abs(v - centers[best])) best = c;
        }
        n[best] += 1.0;
        s[best] += v;
        ss[best] += v * v;
    }
    std::vector<GmmComponent> comps(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (n[c] > 0.0) {
            const double m = s[c] / n[c];
            comps[c] = {n[c] / static_cast<double>(x.size()), m, std::max(ss[c] / n[c] - m * m, 0.01 * overall_var)};
        } else {
            comps[c] = {1.0 / static_cast<double>(x.size()), centers[c], overall_var};
        }
    }
    double wsum = 0.0;
    for (auto& c : comps) wsum += c.weight;
    for (auto& c : comps) c.weight /= wsum;
    return comps;
}

struct EmResult {
    Gmm1D model;
    bool degenerate = false;
};

/// Log-likelihood of every sample plus responsibilities (when resp is non-null).
inline double e_step(std::span<const double> x, const std::vector<GmmComponent>& comps, double* resp) {
    const std::size_t k = comps.size();
    std::vector<double> coef(k), inv2v(k), logcoef(k);
    for (std::size_t c = 0; c < k; ++c) {
        coef[c] = comps[c].weight / std::sqrt(2.0 * std::numbers::pi * comps[c].variance);
        logcoef[c] = std::log(coef[c]);
        inv2v[c] = 0.5 / comps[c].variance;
    }
    std::vector<double> p(k);
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = x[i] - comps[c].mean;
            p[c] = coef[c] * std::exp(-d * d * inv2v[c]);
            sum += p[c];
        }
        if (sum > 1e-280 && std::isfinite(sum)) {
            ll += std::log(sum);
            if (resp) {
                const double inv = 1.0 / sum;
                for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = p[c] * inv;
            }
        } else {
            // Far tail: evaluate in log space.
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = x[i] - comps[c].mean;
                p[c] = logcoef[c] - d * d * inv2v[c];
                mx = std::max(mx, p[c]);
            }
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c) s += std::exp(p[c] - mx);
            const double lse = mx + std::log(s);
            ll += lse;
            if (resp) {
                for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(p[c] - lse);
            }
        }
    }
    return ll;
}

inline EmResult run_em(std::span<const double> x, std::vector<GmmComponent> comps, const GmmOptions& opt,
                       int max_iterations) {
    const std::size_t n = x.size(), k = comps.size();
    std::vector<double> resp(n * k);
    double prev = -std::numeric_limits<double>::infinity();
    EmResult out;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const double ll = e_step(x, comps, resp.data());
        for (std::size_t c = 0; c < k; ++c) {
            double nk = 0.0, sx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + c];
                sx += resp[i * k + c] * x[i];
            }
            if (!(nk > 1e-10)) {
                out.degenerate = true;
                return out;
            }
            const double mean = sx / nk;
            double sxx = 0.0;
            for (std::size_t i = 0; i < n; ++i) sxx += resp[i * k + c] * (x[i] - mean) * (x[i] - mean);
            const double var = sxx / nk + opt.variance_regularization;
            if (!(var >= opt.variance_floor)) {
                out.degenerate = true;
                return out;
            }
            comps[c] = {nk / static_cast<double>(n), mean, var};
        }
        const double avg = ll / static_cast<double>(n);
        if (std::abs(avg - prev) < opt.tolerance) {
            ++it;
            break;
        }
        prev = avg;
    }
    out.model.log_likelihood = e_step(x, comps, nullptr);
    std::sort(comps.begin(), comps.end(), [](auto& a, auto& b) { return a.mean < b.mean; });
    out.model.components = std::move(comps);
    out.model.iterations = it;
    out.model.sample_count = n;
    return out;
}

} // namespace detail

/// EM fit with k-means++ seeding; the best of `restarts` runs is kept.
/// Deterministic for a fixed seed.
inline Gmm1D fit_gmm_1d(std::span<const double> values, int k, std::uint64_t seed, const GmmOptions& opt = {}) {
    if (k < 1) throw ConfigError("fit_gmm_1d: K must be >= 1");
    if (values.size() < 10 * static_cast<std::size_t>(k)) {
        throw ConfigError("fit_gmm_1d: need at least 10*K values (" + std::to_string(10 * k) + "), got " +
                          std::to_string(values.size()));
    }
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("fit_gmm_1d: values must lie in [0, 1]");
    }
    // Short screening runs from independent seeds; degenerate ones are
    // re-seeded, up to a second full round, before giving up.
    Gmm1D best;
    std::vector<GmmComponent> best_start;
    bool have = false;
    int attempts = 0;
    for (int r = 0; r < 2 * opt.restarts && attempts < opt.restarts; ++r) {
        Rng rng = substream(seed, static_cast<std::uint64_t>(r));
        auto start = detail::seed_components(values, static_cast<std::size_t>(k), rng);
        auto res = detail::run_em(values, start, opt, std::min(opt.restart_iterations, opt.max_iterations));
        if (res.degenerate) continue;
        ++attempts;
        if (!have || res.model.log_likelihood > best.log_likelihood) {
            best = std::move(res.model);
            best_start = std::move(start);
            have = true;
        }
    }
    if (!have) throw NumericError("fit_gmm_1d: every restart collapsed a component (K=" + std::to_string(k) + ")");
    if (best.iterations >= std::min(opt.restart_iterations, opt.max_iterations)) {
        auto res = detail::run_em(values, best_start, opt, opt.max_iterations);
        if (res.degenerate) throw NumericError("fit_gmm_1d: component collapsed during the final EM run");
        best = std::move(res.model);
    }
    return best;
}

struct BicSelection {
    int k = 1;
    std::vector<double> bic;  // bic[K-1]
    std::vector<double> gain; // gain[K-2] = max(0, BIC(K-1) - BIC(K))
};

/// Elbow rule on BIC: the smallest K after which no further component
/// improves BIC by more than `fraction` of the largest improvement.
inline BicSelection select_k_by_bic(std::span<const double> values, int k_max, std::uint64_t seed,
                                    double fraction = 0.1, const GmmOptions& opt = {}) {
    if (k_max < 2) throw ConfigError("select_k_by_bic: k_max must be >= 2");
    BicSelection sel;
    for (int k = 1; k <= k_max; ++k) sel.bic.push_back(fit_gmm_1d(values, k, seed, opt).bic());
    double max_gain = 0.0;
    for (int k = 2; k <= k_max; ++k) {
        sel.gain.push_back(std::max(0.0, sel.bic[k - 2] - sel.bic[k - 1]));
        max_gain = std::max(max_gain, sel.gain.back());
    }
    sel.k = 1;
    if (max_gain > 0.0) {
        for (int k = k_max; k >= 2; --k) {
            if (sel.gain[k - 2] >= fraction * max_gain) {
                sel.k = k;
                break;
            }
        }
    }
    return sel;
}

/// Point between the two right-most components where their weighted densities
/// are equal, found by bisection between their means.
inline double threshold_from_gmm(const Gmm1D& model) {
    if (model.k() < 2) {
        throw NumericError("threshold_from_gmm: a single-component mixture has no crossing; use the fixed threshold " +
                           std::to_string(kFallbackThreshold));
    }
    auto comps = model.components;
    std::sort(comps.begin(), comps.end(), [](auto& a, auto& b) { return a.mean < b.mean; });
    const auto& left = comps[comps.size() - 2];
    const auto& right = comps.back();
    auto f = [&](double t) { return right.density(t) - left.density(t); };
    double lo = left.mean, hi = right.mean;
    double flo = f(lo), fhi = f(hi);
    if (!(flo < 0.0 && fhi > 0.0)) {
        throw NumericError("threshold_from_gmm: the right-most components do not cross between their means");
    }
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

} // namespace deisolab
