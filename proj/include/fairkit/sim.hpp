#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairkit/metrics.hpp"
#include "fairkit/reward.hpp"
#include "fairkit/rng.hpp"
#include "fairkit/taxonomy.hpp"

namespace fairkit {

// Factorized categorical policy: per context, step 1 picks gender (2),
// step 2 age (3), step 3 race (5). The tuple log-prob is the sum over steps.
struct Policy {
    std::vector<std::array<std::vector<double>, kAttributeCount>> logits;
    double temperature = 1.0;

    int contexts() const { return static_cast<int>(logits.size()); }
    std::vector<double> probs(int context, AttributeId attribute) const;

    void validate() const;

    static Policy uniform(int contexts = 1);
    // logits = log of the given per-attribute marginals
    static Policy from_marginals(const std::array<std::vector<double>, kAttributeCount>& marginals,
                                 int contexts = 1);
    // named presets: uniform | biased-gender | biased-all
    static Policy preset(const std::string& name, int contexts = 1);

    nlohmann::json to_json() const;
    static Policy from_json(const nlohmann::json& doc);
};

// per-attribute row-stochastic confusion matrices, row = true category
using ConfusionMatrices = std::array<std::vector<std::vector<double>>, kAttributeCount>;

struct SimConfig {
    long long epochs = 260;
    long long inner_epochs = 2;
    long long sampling_batches = 2;
    long long train_batch = 40;
    long long group_size = 20;
    int timesteps = 3;  // fixed by the 3-step factorized chain
    int contexts = 1;
    double kl_coeff = 0.05;
    double ppo_clip = 0.2;
    double learning_rate = 0.05;
    double max_grad_norm = 1.0;
    std::uint64_t seed = 1;
    long long checkpoint_interval = 40;
    long long eval_samples = 2000;
    double stats_decay = 0.99;
    double smooth_decay = 0.95;
    // normalize advantages within each sampled group instead of the
    // per-(prompt, timestep) running table
    bool batch_normalize_advantage = false;
    long long divergence_patience = 50;
    double divergence_tolerance = 0.5;
    std::optional<ConfusionMatrices> classifier_noise;

    void validate() const;

    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& doc);
};

struct SampledGroup {
    std::vector<DemographicTuple> tuples;
    std::vector<std::array<double, kAttributeCount>> logprobs;  // per tuple, per step
};

// One image's experience entering the policy-update phase.
struct SampleRecord {
    int context = 0;
    DemographicTuple tuple;
    std::array<double, kAttributeCount> old_logprob{};
    std::array<double, kAttributeCount> advantage{};  // per timestep (reward broadcast)
    double reward = 0.0;
};

struct UpdateRecord {
    long long update = 0;  // 1-based
    long long epoch = 0;
    double smoothed_reward = 0.0;
    double policy_loss = 0.0;  // per-sample mean, summed over steps
    double kl_loss = 0.0;
    double total_loss = 0.0;

    nlohmann::json to_json() const;
};

struct CheckpointRecord {
    long long update = 0;
    double fairness = 0.0;  // geometric-mean normalized entropy on fresh samples
    double smoothed_reward = 0.0;
    MetricsReport report;

    nlohmann::json to_json() const;
};

struct WarningRecord {
    long long update = 0;
    std::string message;

    nlohmann::json to_json() const;
};

struct Trajectory {
    std::vector<UpdateRecord> updates;
    std::vector<CheckpointRecord> checkpoints;
    std::vector<WarningRecord> warnings;
    Policy final_policy;
    double final_kl = 0.0;  // mean over contexts against the reference
};

SampledGroup sample_group(const Policy& policy, int prompt_context, long long n,
                          std::uint64_t seed);
SampledGroup sample_group(const Policy& policy, int prompt_context, long long n, Rng& rng);

// Identity without matrices; otherwise each attribute label is perturbed by
// its confusion row.
std::vector<DemographicTuple> classify(const std::vector<DemographicTuple>& tuples,
                                       const std::optional<ConfusionMatrices>& confusion,
                                       Rng& rng);

// max(-r A, -clip(r, 1-gamma, 1+gamma) A) with r = exp(new - old)
double ppo_clip_loss(double new_logprob, double old_logprob, double advantage, double gamma);

// exact categorical KL(policy || ref) summed over the 3 factorized steps
double kl_divergence(const Policy& policy, const Policy& ref_policy, int prompt_context);

// (policy_loss + beta * kl_loss) / timesteps
double total_loss(double policy_loss, double kl_loss, double beta, int timesteps);

using LogitGrads = std::vector<std::array<std::vector<double>, kAttributeCount>>;

LogitGrads zero_grads_like(const Policy& policy);
double global_norm(const LogitGrads& grads);

struct MinibatchLosses {
    double policy_loss = 0.0;
    double kl_loss = 0.0;
    double total = 0.0;
};

// Objective over one minibatch: mean over samples and steps of the PPO-clip
// surrogate plus beta times the exact step KL, divided by the step count.
// minibatch_grads returns the analytic gradient of exactly that value
// (branch-active through the max, zero through saturated ratio clips).
MinibatchLosses minibatch_loss(const Policy& policy, const Policy& ref_policy,
                               const std::vector<SampleRecord>& batch, double beta, double gamma);
LogitGrads minibatch_grads(const Policy& policy, const Policy& ref_policy,
                           const std::vector<SampleRecord>& batch, double beta, double gamma);

// Fairness probe: samples fresh tuples from the policy, pools marginal
// counts over contexts, and reports entropies through the metrics module.
MetricsReport evaluate_policy(const Policy& policy, long long samples, std::uint64_t seed,
                              double eps = kDefaultEpsilon);

// Three-phase loop (sample -> reward/advantage -> inner-epoch updates),
// starting from a copy of ref_policy.
Trajectory train(const SimConfig& config, const RewardConfig& reward_config,
                 const Policy& ref_policy);

}  // namespace fairkit
