#include "fairkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fairkit/errors.hpp"
#include "fairkit/rng.hpp"

namespace fairkit {

namespace {

std::string round4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// quantile helper shared with the bootstrap; no (0,1) restriction
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = q * static_cast<double>(n - 1);
    if (h <= 0.0) return sorted.front();
    if (h >= static_cast<double>(n - 1)) return sorted.back();
    std::size_t lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double normalized_entropy(const CategoricalDistribution& dist) {
    const std::size_t k = dist.probs.size();
    if (k < 2) throw ValidationError("normalized_entropy: attribute has fewer than 2 categories");
    if (dist.support_count < 1)
        throw ValidationError("normalized_entropy: empty support");
    double h = 0.0;
    for (double p : dist.probs) {
        if (p < 0.0) throw ValidationError("normalized_entropy: negative probability");
        if (p > 0.0) h -= p * std::log(p);
    }
    h /= std::log(static_cast<double>(k));
    return std::clamp(h, 0.0, 1.0);
}

double intrinsic_diversity(const std::map<std::string, double>& entropies, double eps,
                           const Taxonomy& taxonomy) {
    double prod = 1.0;
    for (const auto& attr : taxonomy.attributes()) {
        auto it = entropies.find(attr.name);
        if (it == entropies.end())
            throw ValidationError("intrinsic_diversity: missing attribute '" + attr.name + "'");
        prod *= std::max(eps, it->second);
    }
    return std::pow(prod, 1.0 / static_cast<double>(taxonomy.attributes().size()));
}

std::map<std::string, double> conditional_scores(
    const std::map<std::string, std::map<std::string, double>>& per_trigger_entropies,
    const Taxonomy& taxonomy) {
    std::map<std::string, double> out;
    for (const auto& [trigger, entropies] : per_trigger_entropies) {
        double prod = 1.0;
        for (const auto& attr : taxonomy.attributes()) {
            auto it = entropies.find(attr.name);
            if (it == entropies.end())
                throw ValidationError("conditional_scores: trigger '" + trigger +
                                      "' missing attribute '" + attr.name + "'");
            prod *= it->second;
        }
        out[trigger] = std::pow(prod, 1.0 / static_cast<double>(taxonomy.attributes().size()));
    }
    return out;
}

double ca_quantile(std::vector<double> g_scores, double q) {
    if (g_scores.empty()) throw ValidationError("ca_quantile: empty score list");
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("ca_quantile: q must lie in (0,1)");
    std::sort(g_scores.begin(), g_scores.end());
    return quantile_sorted(g_scores, q);
}

double ca_mean(const std::vector<double>& g_scores) {
    if (g_scores.empty()) throw ValidationError("ca_mean: empty score list");
    double sum = 0.0;
    for (double g : g_scores) sum += g;
    return sum / static_cast<double>(g_scores.size());
}

double mgbi(double id_score, double ca_q, double eps) {
    return std::sqrt(std::max(eps, id_score) * std::max(eps, ca_q));
}

BootstrapResult bootstrap_ci(const std::vector<double>& g_scores, BootstrapStatistic statistic,
                             double q, long long replicates, double confidence,
                             std::uint64_t seed) {
    if (g_scores.empty()) throw ValidationError("bootstrap_ci: empty score list");
    if (replicates < 100) throw ValidationError("bootstrap_ci: need >= 100 replicates");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ValidationError("bootstrap_ci: confidence must lie in (0,1)");

    auto stat = [&](std::vector<double>& xs) {
        if (statistic == BootstrapStatistic::mean) return ca_mean(xs);
        std::sort(xs.begin(), xs.end());
        return quantile_sorted(xs, q);
    };

    std::vector<double> original = g_scores;
    BootstrapResult res;
    res.point = stat(original);
    res.replicates = replicates;
    res.confidence_level = confidence;
    res.seed = seed;

    const std::size_t n = g_scores.size();
    std::vector<double> stats(static_cast<std::size_t>(replicates));
    std::vector<double> sample(n);
    for (long long r = 0; r < replicates; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        for (std::size_t i = 0; i < n; ++i) sample[i] = g_scores[rng.uniform_index(n)];
        stats[static_cast<std::size_t>(r)] = stat(sample);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - confidence;
    res.lower = quantile_sorted(stats, alpha / 2.0);
    res.upper = quantile_sorted(stats, 1.0 - alpha / 2.0);
    return res;
}

std::map<double, double> quantile_sensitivity(const std::vector<double>& g_scores,
                                              const std::vector<double>& qs) {
    std::map<double, double> out;
    for (double q : qs) out[q] = ca_quantile(g_scores, q);
    return out;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json doc;
    doc["per_attribute_entropy_neutral"] = per_attribute_entropy_neutral;
    doc["id_score"] = id_score;
    doc["q"] = q;
    doc["epsilon"] = epsilon;
    if (!per_trigger_g.empty()) {
        doc["per_trigger_g"] = per_trigger_g;
        doc["ca_q"] = *ca_q;
        doc["ca_mean"] = *ca_mean;
        doc["mgbi"] = *mgbi;
    }
    return doc;
}

std::string MetricsReport::csv_header() { return "model,id,ca_q,ca_mean,mgbi"; }

std::string MetricsReport::csv_row(const std::string& model) const {
    std::string row = model + "," + round4(id_score);
    row += "," + (ca_q ? round4(*ca_q) : std::string());
    row += "," + (ca_mean ? round4(*ca_mean) : std::string());
    row += "," + (mgbi ? round4(*mgbi) : std::string());
    return row;
}

nlohmann::json BootstrapResult::to_json() const {
    return {{"point", point},           {"lower", lower},
            {"upper", upper},           {"replicates", replicates},
            {"confidence_level", confidence_level}, {"seed", seed}};
}

}  // namespace fairkit
