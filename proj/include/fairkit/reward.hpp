#pragma once

#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairkit/labels.hpp"
#include "fairkit/metrics.hpp"
#include "fairkit/taxonomy.hpp"

namespace fairkit {

enum class TargetMode { uniform, explicit_targets };

struct RewardConfig {
    double epsilon = kDefaultEpsilon;
    double r_min = -5.0;
    double r_max = 5.0;
    std::array<double, kAttributeCount> weights{1.0, 1.0, 1.0};
    TargetMode target_mode = TargetMode::uniform;
    // explicit mode only: one probability vector per attribute, sized |C_a|
    std::array<std::vector<double>, kAttributeCount> targets{};

    void validate(const Taxonomy& taxonomy) const;
};

// log(N - N_k + eps) - log(N_k + eps). Kept as a difference of logs so the
// binary antisymmetry r(N_k) = -r(N - N_k) holds bit-exactly.
double base_reward(double n_k, double n, double eps = kDefaultEpsilon);

// log(N p_k + eps) - log(N_k + eps); zero exactly when N_k = N p_k.
double nonuniform_base_reward(double n_k, double n, double p_k, double eps = kDefaultEpsilon);

// Subtracts the arithmetic mean of the list. The mean is accumulated as
// r[0] + sum(r[i] - r[0])/n, which makes constant lists center to exact
// zeros and keeps the binary case an exact no-op.
std::vector<double> center_rewards(const std::vector<double>& per_category,
                                   std::size_t num_categories);

double clip_reward(double r, const RewardConfig& config);

// Sum over attributes of w_a * r_clip; every attribute must be present.
double aggregate_reward(const std::map<AttributeId, double>& per_attribute_clipped,
                        const RewardConfig& config);

// Per-category clipped rewards (base -> center -> clip) for one group.
using RewardTable = std::array<std::vector<double>, kAttributeCount>;
RewardTable reward_table(const GroupCounts& counts, const RewardConfig& config,
                         const Taxonomy& taxonomy);

// One image's classifier outcome; nullopt marks an abstained attribute,
// which contributes reward 0 without shrinking the group.
struct ImageAssignment {
    std::string image_id;
    std::array<std::optional<int>, kAttributeCount> category;
};

GroupCounts counts_from_assignments(const std::string& prompt_id,
                                    const std::vector<ImageAssignment>& assignments,
                                    const Taxonomy& taxonomy);

// Full pipeline for a group: per-category table, then per-image weighted
// aggregation. Throws when assignments disagree with counts.
std::map<std::string, double> group_rewards(const GroupCounts& counts,
                                            const std::vector<ImageAssignment>& assignments,
                                            const RewardConfig& config, const Taxonomy& taxonomy);

// Clipped-reward sweep for one category of a K-way attribute at group size n.
// The swept category holds n_k, the others split the remainder evenly.
struct CurvePoint {
    double n_k = 0.0;
    double reward = 0.0;
};
std::vector<CurvePoint> reward_curve(double n, std::size_t num_categories,
                                     const RewardConfig& config, std::size_t steps_per_unit = 4);

// Running per-(prompt, timestep) reward statistics behind advantage
// normalization. observe() reads the entry first and folds the reward in
// afterwards, so the first observation at a key scores advantage 0.
// Thread-safe; updates are linearized per table.
class RunningStats {
  public:
    enum class Mode { ema, welford };

    explicit RunningStats(Mode mode = Mode::ema, double decay = 0.99);

    double observe(const std::string& prompt_id, int timestep, double reward,
                   double eps = kDefaultEpsilon);

    struct Snapshot {
        double mean = 0.0;
        double variance = 0.0;
        long long count = 0;
    };
    std::optional<Snapshot> lookup(const std::string& prompt_id, int timestep) const;
    std::size_t size() const;
    Mode mode() const { return mode_; }
    double decay() const { return decay_; }

  private:
    struct Entry {
        double mean = 0.0;
        double var = 0.0;  // welford mode stores the squared-deviation sum
        long long count = 0;
    };

    Mode mode_;
    double decay_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, int>, Entry> table_;
};

// (R - mu)/(sigma + eps) against the running table, then updates the entry.
double advantage(double reward, const std::string& prompt_id, int timestep, RunningStats& stats,
                 double eps = kDefaultEpsilon);

}  // namespace fairkit
