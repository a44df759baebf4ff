#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairkit/labels.hpp"
#include "fairkit/taxonomy.hpp"

namespace fairkit {

constexpr double kDefaultEpsilon = 1e-6;

struct MetricsReport {
    std::map<std::string, double> per_attribute_entropy_neutral;
    double id_score = 0.0;
    std::map<std::string, double> per_trigger_g;  // empty when no trigger groups
    std::optional<double> ca_q;
    std::optional<double> ca_mean;
    std::optional<double> mgbi;
    double q = 0.1;
    double epsilon = kDefaultEpsilon;

    nlohmann::json to_json() const;
    // Row shaped like the benchmark summary table: model,id,ca_q,ca_mean,mgbi
    // with 4-decimal rounding; missing conditional fields emit empty cells.
    std::string csv_row(const std::string& model) const;
    static std::string csv_header();
};

struct BootstrapResult {
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    long long replicates = 0;
    double confidence_level = 0.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// h = -sum p ln p / ln K, 0 ln 0 = 0, clamped into [0, 1].
// Throws for attributes with fewer than two categories or empty support.
double normalized_entropy(const CategoricalDistribution& dist);

// Geometric mean over attributes of max(eps, h_a). Requires one entry per
// taxonomy attribute, keyed by attribute name.
double intrinsic_diversity(const std::map<std::string, double>& entropies, double eps,
                           const Taxonomy& taxonomy);

// Per-trigger score g(s): geometric mean over attributes of h_a(. | s).
// Every trigger entry must carry all attributes. No epsilon floor here.
std::map<std::string, double> conditional_scores(
    const std::map<std::string, std::map<std::string, double>>& per_trigger_entropies,
    const Taxonomy& taxonomy);

// Linear-interpolation quantile on order statistics, position q * (n - 1).
double ca_quantile(std::vector<double> g_scores, double q);

double ca_mean(const std::vector<double>& g_scores);

double mgbi(double id_score, double ca_q, double eps);

enum class BootstrapStatistic { mean, quantile };

// Percentile bootstrap over the per-context scores. Replicates use seeds
// derived per replicate, so results are independent of evaluation order.
BootstrapResult bootstrap_ci(const std::vector<double>& g_scores, BootstrapStatistic statistic,
                             double q, long long replicates, double confidence,
                             std::uint64_t seed);

std::map<double, double> quantile_sensitivity(const std::vector<double>& g_scores,
                                              const std::vector<double>& qs = {0.05, 0.10, 0.20});

}  // namespace fairkit
