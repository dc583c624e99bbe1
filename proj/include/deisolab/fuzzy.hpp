#pragma once

// Mamdani fuzzy inference over the two spectral pair descriptors:
//   m  - distance between the means of two components [Da]
//   s  - ratio of their widths (>= 1)
// min implication, max aggregation, centroid defuzzification on [0, 1].

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "deisolab/error.hpp"
#include "deisolab/version.hpp"

namespace deisolab {

/// Gaussian membership exp(-(x-c)^2 / (2 w^2)), optionally complemented (1 - g).
struct GaussianTerm {
    double center = 0.0;
    double width = 1.0;
    bool complement = false;

    double operator()(double x) const noexcept {
        const double d = (x - center) / width;
        const double g = std::exp(-0.5 * d * d);
        return complement ? 1.0 - g : g;
    }

    bool operator==(const GaussianTerm&) const = default;
};

enum class Connective { And, Or };

struct FuzzyRule {
    std::string m_term; // empty: input not used by this rule
    std::string s_term;
    Connective connective = Connective::And;
    std::string output_term;

    bool operator==(const FuzzyRule&) const = default;
};

/// Which width measure enters the ratio s.
enum class WidthRatio { Variance, Sigma };

struct FISConfig {
    std::map<std::string, GaussianTerm> m_terms;
    std::map<std::string, GaussianTerm> s_terms;
    std::map<std::string, GaussianTerm> output_terms;
    std::vector<FuzzyRule> rules;
    int resolution = 1001;
    WidthRatio ratio = WidthRatio::Variance;

    /// Name of the output term with the largest / smallest center.
    std::string high_term() const {
        auto it = std::max_element(output_terms.begin(), output_terms.end(),
                                   [](auto& a, auto& b) { return a.second.center < b.second.center; });
        return it == output_terms.end() ? std::string{} : it->first;
    }
    std::string low_term() const {
        auto it = std::min_element(output_terms.begin(), output_terms.end(),
                                   [](auto& a, auto& b) { return a.second.center < b.second.center; });
        return it == output_terms.end() ? std::string{} : it->first;
    }

    void validate() const {
        auto check_terms = [](const auto& terms, const char* what) {
            for (const auto& [name, t] : terms) {
                if (!(t.width > 0.0) || !std::isfinite(t.width) || !std::isfinite(t.center)) {
                    throw ConfigError(std::string("fis: ") + what + " term '" + name + "' needs a positive finite width");
                }
            }
        };
        check_terms(m_terms, "m");
        check_terms(s_terms, "s");
        check_terms(output_terms, "output");
        if (output_terms.size() < 2) throw ConfigError("fis: at least two output terms are required");
        if (resolution < 3) throw ConfigError("fis: resolution must be >= 3");
        bool concludes_high = false, concludes_low = false;
        const auto hi = high_term(), lo = low_term();
        for (const auto& r : rules) {
            if (r.m_term.empty() && r.s_term.empty()) throw ConfigError("fis: rule without antecedent");
            if (!r.m_term.empty() && !m_terms.contains(r.m_term)) throw ConfigError("fis: unknown m term '" + r.m_term + "'");
            if (!r.s_term.empty() && !s_terms.contains(r.s_term)) throw ConfigError("fis: unknown s term '" + r.s_term + "'");
            if (!output_terms.contains(r.output_term)) throw ConfigError("fis: unknown output term '" + r.output_term + "'");
            concludes_high |= r.output_term == hi;
            concludes_low |= r.output_term == lo;
        }
        if (!concludes_high || !concludes_low) {
            throw ConfigError("fis: rule base must conclude both the highest and the lowest output term");
        }
    }

    bool operator==(const FISConfig&) const = default;
};

/// Default inference system. Output "high" sits at the top of [0, 1] so
/// that an ideal isotope step (m = 1.003, s = 1) defuzzifies above 0.95.
inline FISConfig default_fis_config() {
    FISConfig c;
    c.m_terms = {{"near_one", {kIsotopeSpacing, 0.15, false}}, {"far", {kIsotopeSpacing, 1.2, true}}};
    c.s_terms = {{"similar", {1.0, 0.5, false}}, {"dissimilar", {1.0, 3.0, true}}};
    c.output_terms = {{"high", {1.0, 0.05, false}}, {"low", {0.15, 0.25, false}}};
    c.rules = {{"near_one", "similar", Connective::And, "high"},
               {"far", "", Connective::And, "low"},
               {"", "dissimilar", Connective::And, "low"}};
    return c;
}

inline void to_json(nlohmann::json& j, const GaussianTerm& t) {
    j = {{"center", t.center}, {"width", t.width}, {"complement", t.complement}};
}

inline void from_json(const nlohmann::json& j, GaussianTerm& t) {
    t.center = j.at("center").get<double>();
    t.width = j.at("width").get<double>();
    t.complement = j.value("complement", false);
}

inline nlohmann::json fis_to_json(const FISConfig& c) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : c.rules) {
        nlohmann::json jr = {{"connective", r.connective == Connective::And ? "and" : "or"}, {"output", r.output_term}};
        if (!r.m_term.empty()) jr["m"] = r.m_term;
        if (!r.s_term.empty()) jr["s"] = r.s_term;
        rules.push_back(jr);
    }
    return {{"format_version", kFormatVersion},
            {"inputs", {{"m", c.m_terms}, {"s", c.s_terms}}},
            {"output", c.output_terms},
            {"rules", rules},
            {"resolution", c.resolution},
            {"s_ratio", c.ratio == WidthRatio::Variance ? "variance" : "sigma"}};
}

inline FISConfig fis_from_json(const nlohmann::json& j) {
    FISConfig c;
    try {
        if (j.value("format_version", 0) != kFormatVersion) throw ConfigError("fis: unsupported format_version");
        c.m_terms = j.at("inputs").at("m").get<std::map<std::string, GaussianTerm>>();
        c.s_terms = j.at("inputs").at("s").get<std::map<std::string, GaussianTerm>>();
        c.output_terms = j.at("output").get<std::map<std::string, GaussianTerm>>();
        for (const auto& jr : j.at("rules")) {
            FuzzyRule r;
            r.m_term = jr.value("m", std::string{});
            r.s_term = jr.value("s", std::string{});
            const auto conn = jr.value("connective", std::string("and"));
            if (conn != "and" && conn != "or") throw ConfigError("fis: connective must be and|or");
            r.connective = conn == "and" ? Connective::And : Connective::Or;
            r.output_term = jr.at("output").get<std::string>();
            c.rules.push_back(r);
        }
        c.resolution = j.value("resolution", 1001);
        const auto ratio = j.value("s_ratio", std::string("variance"));
        if (ratio != "variance" && ratio != "sigma") throw ConfigError("fis: s_ratio must be variance|sigma");
        c.ratio = ratio == "variance" ? WidthRatio::Variance : WidthRatio::Sigma;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("fis: ") + e.what());
    }
    c.validate();
    return c;
}

/// Symmetric width ratio max/min, so s >= 1 regardless of pair order.
inline double width_ratio(double sigma_a, double sigma_b, WidthRatio mode) {
    const double hi = std::max(sigma_a, sigma_b), lo = std::min(sigma_a, sigma_b);
    const double r = hi / lo;
    return mode == WidthRatio::Variance ? r * r : r;
}

/// Pre-tabulated inference engine; immutable and safe to share across threads.
class MamdaniEngine {
public:
    explicit MamdaniEngine(FISConfig config) : config_(std::move(config)) {
        config_.validate();
        const auto n = static_cast<std::size_t>(config_.resolution);
        grid_.resize(n);
        weights_.assign(n, 1.0);
        weights_.front() = weights_.back() = 0.5; // trapezoid
        for (std::size_t k = 0; k < n; ++k) grid_[k] = static_cast<double>(k) / static_cast<double>(n - 1);
        for (const auto& r : config_.rules) {
            std::vector<double> table(n);
            const auto& term = config_.output_terms.at(r.output_term);
            for (std::size_t k = 0; k < n; ++k) table[k] = term(grid_[k]);
            rule_output_.push_back(std::move(table));
        }
    }

    const FISConfig& config() const noexcept { return config_; }

    /// Firing strength of each rule.
    std::vector<double> firing(double m, double s) const {
        std::vector<double> out;
        out.reserve(config_.rules.size());
        for (const auto& r : config_.rules) {
            const bool use_m = !r.m_term.empty(), use_s = !r.s_term.empty();
            const double mu_m = use_m ? config_.m_terms.at(r.m_term)(m) : 0.0;
            const double mu_s = use_s ? config_.s_terms.at(r.s_term)(s) : 0.0;
            double w;
            if (use_m && use_s) {
                w = r.connective == Connective::And ? std::min(mu_m, mu_s) : std::max(mu_m, mu_s);
            } else {
                w = use_m ? mu_m : mu_s;
            }
            out.push_back(w);
        }
        return out;
    }

    /// Defuzzified possibility in [0, 1].
    double possibility(double m, double s) const {
        const auto w = firing(m, s);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            double agg = 0.0;
            for (std::size_t r = 0; r < w.size(); ++r) agg = std::max(agg, std::min(w[r], rule_output_[r][k]));
            num += weights_[k] * grid_[k] * agg;
            den += weights_[k] * agg;
        }
        if (!(den > 0.0)) return 0.0;
        return std::clamp(num / den, 0.0, 1.0);
    }

private:
    FISConfig config_;
    std::vector<double> grid_;
    std::vector<double> weights_;
    std::vector<std::vector<double>> rule_output_;
};

inline double mamdani_possibility(double m, double s, const FISConfig& config) {
    if (!(m > 0.0) || !(s > 0.0)) throw ConfigError("mamdani_possibility: m and s must be positive");
    return MamdaniEngine(config).possibility(m, s);
}

} // namespace deisolab
