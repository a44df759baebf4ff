#include "fairkit/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fairkit/errors.hpp"

namespace fairkit {

void RewardConfig::validate(const Taxonomy& taxonomy) const {
    if (!(epsilon > 0.0)) throw ValidationError("reward config: epsilon must be positive");
    if (!(r_min < 0.0 && 0.0 < r_max))
        throw ValidationError("reward config: clip bounds must satisfy r_min < 0 < r_max");
    for (double w : weights)
        if (w < 0.0) throw ValidationError("reward config: negative attribute weight");
    if (target_mode == TargetMode::explicit_targets) {
        for (const auto& attr : taxonomy.attributes()) {
            const auto& t = targets[static_cast<int>(attr.id)];
            if (t.size() != attr.categories.size())
                throw ValidationError("reward config: targets for '" + attr.name +
                                      "' must list one probability per category");
            double sum = 0.0;
            for (double p : t) {
                if (p < 0.0)
                    throw ValidationError("reward config: negative target for '" + attr.name + "'");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw ValidationError("reward config: targets for '" + attr.name +
                                      "' must sum to 1");
        }
    }
}

namespace {

void check_counts(double n_k, double n, double eps) {
    if (!(eps > 0.0)) throw ValidationError("base reward: epsilon must be positive");
    if (!(n >= 1.0)) throw ValidationError("base reward: group size must be at least 1");
    if (n_k < 0.0) throw ValidationError("base reward: negative category count");
    if (n_k > n) throw ValidationError("base reward: category count exceeds group size");
}

}  // namespace

double base_reward(double n_k, double n, double eps) {
    check_counts(n_k, n, eps);
    return std::log(n - n_k + eps) - std::log(n_k + eps);
}

double nonuniform_base_reward(double n_k, double n, double p_k, double eps) {
    check_counts(n_k, n, eps);
    if (!(p_k >= 0.0 && p_k <= 1.0))
        throw ValidationError("base reward: target probability outside [0, 1]");
    return std::log(n * p_k + eps) - std::log(n_k + eps);
}

std::vector<double> center_rewards(const std::vector<double>& per_category,
                                   std::size_t num_categories) {
    if (per_category.empty()) throw ValidationError("center_rewards: empty reward list");
    if (per_category.size() != num_categories)
        throw ValidationError("center_rewards: list length does not match category count");
    double shift_sum = 0.0;
    for (double r : per_category) shift_sum += r - per_category[0];
    const double mean = per_category[0] + shift_sum / static_cast<double>(per_category.size());
    std::vector<double> out(per_category.size());
    for (std::size_t i = 0; i < per_category.size(); ++i) out[i] = per_category[i] - mean;
    return out;
}

double clip_reward(double r, const RewardConfig& config) {
    return std::clamp(r, config.r_min, config.r_max);
}

double aggregate_reward(const std::map<AttributeId, double>& per_attribute_clipped,
                        const RewardConfig& config) {
    double total = 0.0;
    for (int a = 0; a < kAttributeCount; ++a) {
        auto it = per_attribute_clipped.find(static_cast<AttributeId>(a));
        if (it == per_attribute_clipped.end())
            throw ValidationError("aggregate_reward: missing attribute value");
        if (!std::isfinite(it->second))
            throw ValidationError("aggregate_reward: non-finite attribute reward");
        total += config.weights[a] * it->second;
    }
    return total;
}

RewardTable reward_table(const GroupCounts& counts, const RewardConfig& config,
                         const Taxonomy& taxonomy) {
    config.validate(taxonomy);
    if (counts.group_size < 1) throw ValidationError("reward table: empty group");
    RewardTable table;
    for (const auto& attr : taxonomy.attributes()) {
        const int a = static_cast<int>(attr.id);
        const auto& n_k = counts.per_attribute[a];
        if (n_k.size() != attr.categories.size())
            throw ValidationError("reward table: count vector size mismatch for '" + attr.name +
                                  "'");
        std::vector<double> base(n_k.size());
        for (std::size_t k = 0; k < n_k.size(); ++k) {
            const double nk = static_cast<double>(n_k[k]);
            const double n = static_cast<double>(counts.group_size);
            base[k] = config.target_mode == TargetMode::uniform
                          ? base_reward(nk, n, config.epsilon)
                          : nonuniform_base_reward(nk, n, config.targets[a][k], config.epsilon);
        }
        std::vector<double> centered = center_rewards(base, n_k.size());
        table[a].resize(centered.size());
        for (std::size_t k = 0; k < centered.size(); ++k)
            table[a][k] = clip_reward(centered[k], config);
    }
    return table;
}

GroupCounts counts_from_assignments(const std::string& prompt_id,
                                    const std::vector<ImageAssignment>& assignments,
                                    const Taxonomy& taxonomy) {
    GroupCounts counts;
    counts.prompt_id = prompt_id;
    counts.group_size = static_cast<long long>(assignments.size());
    std::set<std::string> ids;
    for (const auto& img : assignments)
        if (!ids.insert(img.image_id).second)
            throw ValidationError("assignments: duplicate image id '" + img.image_id + "'");
    for (const auto& attr : taxonomy.attributes()) {
        const int a = static_cast<int>(attr.id);
        counts.per_attribute[a].assign(attr.categories.size(), 0);
        for (const auto& img : assignments) {
            const auto& cat = img.category[a];
            if (!cat) {
                ++counts.abstained[a];
                continue;
            }
            if (*cat < 0 || *cat >= static_cast<int>(attr.categories.size()))
                throw ValidationError("assignments: category index out of range for '" +
                                      attr.name + "'");
            ++counts.per_attribute[a][*cat];
        }
    }
    return counts;
}

std::map<std::string, double> group_rewards(const GroupCounts& counts,
                                            const std::vector<ImageAssignment>& assignments,
                                            const RewardConfig& config, const Taxonomy& taxonomy) {
    GroupCounts recounted = counts_from_assignments(counts.prompt_id, assignments, taxonomy);
    if (recounted.group_size != counts.group_size)
        throw ValidationError("group_rewards: assignment count does not match group size");
    for (int a = 0; a < kAttributeCount; ++a) {
        if (recounted.per_attribute[a] != counts.per_attribute[a] ||
            recounted.abstained[a] != counts.abstained[a])
            throw ValidationError("group_rewards: assignments disagree with counts");
    }

    const RewardTable table = reward_table(counts, config, taxonomy);
    std::map<std::string, double> rewards;
    for (const auto& img : assignments) {
        std::map<AttributeId, double> per_attribute;
        for (int a = 0; a < kAttributeCount; ++a) {
            const auto& cat = img.category[a];
            per_attribute[static_cast<AttributeId>(a)] = cat ? table[a][*cat] : 0.0;
        }
        rewards[img.image_id] = aggregate_reward(per_attribute, config);
    }
    return rewards;
}

std::vector<CurvePoint> reward_curve(double n, std::size_t num_categories,
                                     const RewardConfig& config, std::size_t steps_per_unit) {
    if (num_categories < 2) throw ValidationError("reward curve: need at least 2 categories");
    if (!(n >= 1.0)) throw ValidationError("reward curve: group size must be at least 1");
    if (steps_per_unit < 1) throw ValidationError("reward curve: need at least 1 step per unit");

    const auto k = static_cast<double>(num_categories);
    std::vector<CurvePoint> curve;
    const auto total_steps = static_cast<std::size_t>(n * static_cast<double>(steps_per_unit));
    curve.reserve(total_steps + 1);
    for (std::size_t s = 0; s <= total_steps; ++s) {
        const double n_k =
            static_cast<double>(s) / static_cast<double>(steps_per_unit);
        const double rest = (n - n_k) / (k - 1.0);
        std::vector<double> base(num_categories, 0.0);
        for (std::size_t c = 0; c < num_categories; ++c)
            base[c] = base_reward(c == 0 ? n_k : rest, n, config.epsilon);
        std::vector<double> centered = center_rewards(base, num_categories);
        curve.push_back({n_k, clip_reward(centered[0], config)});
    }
    return curve;
}

RunningStats::RunningStats(Mode mode, double decay) : mode_(mode), decay_(decay) {
    if (!(decay > 0.0 && decay < 1.0))
        throw ValidationError("running stats: decay must lie in (0, 1)");
}

double RunningStats::observe(const std::string& prompt_id, int timestep, double reward,
                             double eps) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, fresh] = table_.try_emplace({prompt_id, timestep});
    Entry& e = it->second;
    if (fresh) {
        e.mean = reward;
        e.count = 1;
        return 0.0;
    }

    const double variance = mode_ == Mode::welford && e.count > 0
                                ? e.var / static_cast<double>(e.count)
                                : e.var;
    const double sigma = e.count >= 2 ? std::sqrt(variance) : 1.0;
    const double adv = (reward - e.mean) / (sigma + eps);

    if (mode_ == Mode::ema) {
        const double delta = reward - e.mean;
        e.mean += (1.0 - decay_) * delta;
        e.var = decay_ * (e.var + (1.0 - decay_) * delta * delta);
        ++e.count;
    } else {
        ++e.count;
        const double delta = reward - e.mean;
        e.mean += delta / static_cast<double>(e.count);
        e.var += delta * (reward - e.mean);
    }
    return adv;
}

std::optional<RunningStats::Snapshot> RunningStats::lookup(const std::string& prompt_id,
                                                           int timestep) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = table_.find({prompt_id, timestep});
    if (it == table_.end()) return std::nullopt;
    const Entry& e = it->second;
    const double variance = mode_ == Mode::welford && e.count > 0
                                ? e.var / static_cast<double>(e.count)
                                : e.var;
    return Snapshot{e.mean, variance, e.count};
}

std::size_t RunningStats::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return table_.size();
}

double advantage(double reward, const std::string& prompt_id, int timestep, RunningStats& stats,
                 double eps) {
    return stats.observe(prompt_id, timestep, reward, eps);
}

}  // namespace fairkit
