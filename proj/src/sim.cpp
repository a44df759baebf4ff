#include "fairkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairkit/errors.hpp"
#include "fairkit/labels.hpp"

namespace fairkit {

namespace {

std::vector<double> softmax_scaled(const std::vector<double>& logits, double temperature) {
    std::vector<double> out(logits.size());
    double top = -std::numeric_limits<double>::infinity();
    for (double z : logits) top = std::max(top, z / temperature);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] / temperature - top);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

std::string context_key(int context) { return "context-" + std::to_string(context); }

void validate_confusion(const ConfusionMatrices& confusion) {
    for (int a = 0; a < kAttributeCount; ++a) {
        const auto k = static_cast<std::size_t>(kCategoryCounts[a]);
        const auto& m = confusion[a];
        if (m.size() != k)
            throw ValidationError("classifier noise: confusion matrix must have one row per category");
        for (const auto& row : m) {
            if (row.size() != k)
                throw ValidationError("classifier noise: confusion matrix must be square");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw ValidationError("classifier noise: negative entry");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw ValidationError("classifier noise: confusion rows must sum to 1");
        }
    }
}

struct ProbTables {
    // [context][attribute] sampling probabilities
    std::vector<std::array<std::vector<double>, kAttributeCount>> p;

    explicit ProbTables(const Policy& policy) {
        p.resize(policy.logits.size());
        for (int c = 0; c < policy.contexts(); ++c)
            for (int a = 0; a < kAttributeCount; ++a)
                p[c][a] = policy.probs(c, static_cast<AttributeId>(a));
    }
};

// Shared objective evaluation: loss terms and, when grads != nullptr, the
// analytic gradient of the same expression.
MinibatchLosses accumulate_minibatch(const Policy& policy, const Policy& ref_policy,
                                     const std::vector<SampleRecord>& batch, double beta,
                                     double gamma, LogitGrads* grads) {
    if (batch.empty()) throw ValidationError("minibatch: empty batch");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("minibatch: ppo clip outside (0,1)");
    if (beta < 0.0) throw ValidationError("minibatch: negative kl coefficient");
    policy.validate();
    ref_policy.validate();
    if (policy.contexts() != ref_policy.contexts())
        throw ValidationError("minibatch: policy/reference context mismatch");

    const ProbTables cur(policy);
    const ProbTables ref(ref_policy);
    const double inv_temp = 1.0 / policy.temperature;

    double policy_sum = 0.0;
    double kl_sum = 0.0;
    for (const auto& rec : batch) {
        if (rec.context < 0 || rec.context >= policy.contexts())
            throw ValidationError("minibatch: sample context out of range");
        for (int a = 0; a < kAttributeCount; ++a) {
            const auto& p = cur.p[rec.context][a];
            const auto& q = ref.p[rec.context][a];
            const int cat = rec.tuple.category(static_cast<AttributeId>(a));
            const double new_lp = std::log(p[static_cast<std::size_t>(cat)]);
            const double ratio = std::exp(new_lp - rec.old_logprob[a]);
            const double adv = rec.advantage[a];
            const double unclipped = -ratio * adv;
            const double clipped = -std::clamp(ratio, 1.0 - gamma, 1.0 + gamma) * adv;
            const bool take_unclipped = unclipped >= clipped;
            policy_sum += take_unclipped ? unclipped : clipped;

            double kl = 0.0;
            for (std::size_t j = 0; j < p.size(); ++j)
                kl += p[j] * (std::log(p[j]) - std::log(q[j]));
            kl_sum += kl;

            if (grads) {
                auto& g = (*grads)[static_cast<std::size_t>(rec.context)][a];
                if (take_unclipped) {
                    // d(-r A)/d theta_j = -A r (1[j=cat] - p_j) / temperature;
                    // the saturated clip branch has zero gradient
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        const double onehot = j == static_cast<std::size_t>(cat) ? 1.0 : 0.0;
                        g[j] += -adv * ratio * (onehot - p[j]) * inv_temp;
                    }
                }
                if (beta != 0.0) {
                    for (std::size_t j = 0; j < p.size(); ++j)
                        g[j] += beta * p[j] * ((std::log(p[j]) - std::log(q[j])) - kl) * inv_temp;
                }
            }
        }
    }

    const auto m = static_cast<double>(batch.size());
    if (grads) {
        const double scale = 1.0 / (m * static_cast<double>(kAttributeCount));
        for (auto& ctx : *grads)
            for (auto& attr : ctx)
                for (double& v : attr) v *= scale;
    }
    MinibatchLosses losses;
    losses.policy_loss = policy_sum / m;
    losses.kl_loss = kl_sum / m;
    losses.total = total_loss(losses.policy_loss, losses.kl_loss, beta, kAttributeCount);
    return losses;
}

}  // namespace

std::vector<double> Policy::probs(int context, AttributeId attribute) const {
    if (context < 0 || context >= contexts())
        throw ValidationError("policy: context index out of range");
    return softmax_scaled(logits[static_cast<std::size_t>(context)][static_cast<int>(attribute)],
                          temperature);
}

void Policy::validate() const {
    if (logits.empty()) throw ValidationError("policy: needs at least one context");
    if (!(temperature > 0.0)) throw ValidationError("policy: temperature must be positive");
    for (const auto& ctx : logits) {
        for (int a = 0; a < kAttributeCount; ++a) {
            if (ctx[a].size() != static_cast<std::size_t>(kCategoryCounts[a]))
                throw ValidationError("policy: logit vector size does not match the category count");
            for (double z : ctx[a])
                if (!std::isfinite(z)) throw ValidationError("policy: non-finite logit");
        }
    }
}

Policy Policy::uniform(int contexts) {
    if (contexts < 1) throw ValidationError("policy: needs at least one context");
    Policy p;
    p.logits.resize(static_cast<std::size_t>(contexts));
    for (auto& ctx : p.logits)
        for (int a = 0; a < kAttributeCount; ++a)
            ctx[a].assign(static_cast<std::size_t>(kCategoryCounts[a]), 0.0);
    return p;
}

Policy Policy::from_marginals(const std::array<std::vector<double>, kAttributeCount>& marginals,
                              int contexts) {
    Policy p = uniform(contexts);
    for (int a = 0; a < kAttributeCount; ++a) {
        const auto& m = marginals[a];
        if (m.size() != static_cast<std::size_t>(kCategoryCounts[a]))
            throw ValidationError("policy marginals: size does not match the category count");
        double sum = 0.0;
        for (double v : m) {
            if (!(v > 0.0)) throw ValidationError("policy marginals: entries must be positive");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError("policy marginals: entries must sum to 1");
        for (auto& ctx : p.logits)
            for (std::size_t j = 0; j < m.size(); ++j) ctx[a][j] = std::log(m[j]);
    }
    return p;
}

Policy Policy::preset(const std::string& name, int contexts) {
    if (name == "uniform") return uniform(contexts);
    if (name == "biased-gender")
        return from_marginals({{{0.9, 0.1},
                                {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                {0.2, 0.2, 0.2, 0.2, 0.2}}},
                              contexts);
    if (name == "biased-all")
        return from_marginals({{{0.9, 0.1}, {0.6, 0.3, 0.1}, {0.6, 0.1, 0.1, 0.1, 0.1}}},
                              contexts);
    throw ValidationError("policy preset: unknown name '" + name +
                          "' (expected uniform | biased-gender | biased-all)");
}

nlohmann::json Policy::to_json() const {
    nlohmann::json ctxs = nlohmann::json::array();
    for (const auto& ctx : logits) ctxs.push_back({ctx[0], ctx[1], ctx[2]});
    return {{"temperature", temperature}, {"contexts", ctxs}};
}

Policy Policy::from_json(const nlohmann::json& doc) {
    Policy p;
    p.temperature = doc.value("temperature", 1.0);
    if (!doc.contains("contexts") || !doc["contexts"].is_array() || doc["contexts"].empty())
        throw ValidationError("policy json: needs a non-empty 'contexts' array");
    for (const auto& ctx : doc["contexts"]) {
        if (!ctx.is_array() || ctx.size() != kAttributeCount)
            throw ValidationError("policy json: each context needs 3 logit vectors");
        std::array<std::vector<double>, kAttributeCount> entry;
        for (int a = 0; a < kAttributeCount; ++a)
            entry[a] = ctx[static_cast<std::size_t>(a)].get<std::vector<double>>();
        p.logits.push_back(std::move(entry));
    }
    p.validate();
    return p;
}

void SimConfig::validate() const {
    if (epochs < 1 || inner_epochs < 1 || sampling_batches < 1 || train_batch < 1 ||
        group_size < 1 || checkpoint_interval < 1 || eval_samples < 1 || contexts < 1)
        throw ValidationError("sim config: all counts must be at least 1");
    if (timesteps != kAttributeCount)
        throw ValidationError("sim config: the factorized chain fixes timesteps at 3");
    if (!(ppo_clip > 0.0 && ppo_clip < 1.0))
        throw ValidationError("sim config: ppo clip must lie in (0,1)");
    if (kl_coeff < 0.0) throw ValidationError("sim config: kl coefficient must be nonnegative");
    if (!(learning_rate > 0.0)) throw ValidationError("sim config: learning rate must be positive");
    if (!(max_grad_norm > 0.0)) throw ValidationError("sim config: grad norm bound must be positive");
    if (!(stats_decay > 0.0 && stats_decay < 1.0))
        throw ValidationError("sim config: stats decay must lie in (0,1)");
    if (!(smooth_decay > 0.0 && smooth_decay < 1.0))
        throw ValidationError("sim config: smoothing decay must lie in (0,1)");
    if (divergence_patience < 1) throw ValidationError("sim config: patience must be at least 1");
    if (divergence_tolerance < 0.0)
        throw ValidationError("sim config: divergence tolerance must be nonnegative");
    if (eval_samples < contexts)
        throw ValidationError("sim config: eval samples must cover every context");
    if (classifier_noise) validate_confusion(*classifier_noise);
}

nlohmann::json SimConfig::to_json() const {
    nlohmann::json doc{{"epochs", epochs},
                       {"inner_epochs", inner_epochs},
                       {"sampling_batches", sampling_batches},
                       {"train_batch", train_batch},
                       {"group_size", group_size},
                       {"timesteps", timesteps},
                       {"contexts", contexts},
                       {"kl_coeff", kl_coeff},
                       {"ppo_clip", ppo_clip},
                       {"learning_rate", learning_rate},
                       {"max_grad_norm", max_grad_norm},
                       {"seed", seed},
                       {"checkpoint_interval", checkpoint_interval},
                       {"eval_samples", eval_samples},
                       {"stats_decay", stats_decay},
                       {"smooth_decay", smooth_decay},
                       {"batch_normalize_advantage", batch_normalize_advantage},
                       {"divergence_patience", divergence_patience},
                       {"divergence_tolerance", divergence_tolerance}};
    if (classifier_noise) {
        nlohmann::json noise = nlohmann::json::array();
        for (const auto& m : *classifier_noise) noise.push_back(m);
        doc["classifier_noise"] = noise;
    } else {
        doc["classifier_noise"] = nullptr;
    }
    return doc;
}

SimConfig SimConfig::from_json(const nlohmann::json& doc) {
    SimConfig d;
    SimConfig c;
    c.epochs = doc.value("epochs", d.epochs);
    c.inner_epochs = doc.value("inner_epochs", d.inner_epochs);
    c.sampling_batches = doc.value("sampling_batches", d.sampling_batches);
    c.train_batch = doc.value("train_batch", d.train_batch);
    c.group_size = doc.value("group_size", d.group_size);
    c.timesteps = doc.value("timesteps", d.timesteps);
    c.contexts = doc.value("contexts", d.contexts);
    c.kl_coeff = doc.value("kl_coeff", d.kl_coeff);
    c.ppo_clip = doc.value("ppo_clip", d.ppo_clip);
    c.learning_rate = doc.value("learning_rate", d.learning_rate);
    c.max_grad_norm = doc.value("max_grad_norm", d.max_grad_norm);
    c.seed = doc.value("seed", d.seed);
    c.checkpoint_interval = doc.value("checkpoint_interval", d.checkpoint_interval);
    c.eval_samples = doc.value("eval_samples", d.eval_samples);
    c.stats_decay = doc.value("stats_decay", d.stats_decay);
    c.smooth_decay = doc.value("smooth_decay", d.smooth_decay);
    c.batch_normalize_advantage =
        doc.value("batch_normalize_advantage", d.batch_normalize_advantage);
    c.divergence_patience = doc.value("divergence_patience", d.divergence_patience);
    c.divergence_tolerance = doc.value("divergence_tolerance", d.divergence_tolerance);
    if (doc.contains("classifier_noise") && !doc["classifier_noise"].is_null()) {
        const auto& noise = doc["classifier_noise"];
        if (!noise.is_array() || noise.size() != kAttributeCount)
            throw ValidationError("sim config: classifier_noise needs 3 confusion matrices");
        ConfusionMatrices m;
        for (int a = 0; a < kAttributeCount; ++a)
            m[a] = noise[static_cast<std::size_t>(a)].get<std::vector<std::vector<double>>>();
        c.classifier_noise = std::move(m);
    }
    return c;
}

nlohmann::json UpdateRecord::to_json() const {
    return {{"update", update},
            {"epoch", epoch},
            {"smoothed_reward", smoothed_reward},
            {"policy_loss", policy_loss},
            {"kl_loss", kl_loss},
            {"total_loss", total_loss}};
}

nlohmann::json CheckpointRecord::to_json() const {
    return {{"update", update},
            {"fairness", fairness},
            {"smoothed_reward", smoothed_reward},
            {"report", report.to_json()}};
}

nlohmann::json WarningRecord::to_json() const {
    return {{"update", update}, {"message", message}};
}

SampledGroup sample_group(const Policy& policy, int prompt_context, long long n, Rng& rng) {
    policy.validate();
    if (n < 1) throw ValidationError("sample_group: group size must be at least 1");
    if (prompt_context < 0 || prompt_context >= policy.contexts())
        throw ValidationError("sample_group: context index out of range");

    std::array<std::vector<double>, kAttributeCount> p;
    for (int a = 0; a < kAttributeCount; ++a)
        p[a] = policy.probs(prompt_context, static_cast<AttributeId>(a));

    SampledGroup group;
    group.tuples.resize(static_cast<std::size_t>(n));
    group.logprobs.resize(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        DemographicTuple t;
        t.gender_cat = static_cast<int>(rng.categorical(p[0]));
        t.age_cat = static_cast<int>(rng.categorical(p[1]));
        t.race_cat = static_cast<int>(rng.categorical(p[2]));
        group.tuples[static_cast<std::size_t>(i)] = t;
        for (int a = 0; a < kAttributeCount; ++a)
            group.logprobs[static_cast<std::size_t>(i)][a] =
                std::log(p[a][static_cast<std::size_t>(
                    t.category(static_cast<AttributeId>(a)))]);
    }
    return group;
}

SampledGroup sample_group(const Policy& policy, int prompt_context, long long n,
                          std::uint64_t seed) {
    Rng rng(seed);
    return sample_group(policy, prompt_context, n, rng);
}

std::vector<DemographicTuple> classify(const std::vector<DemographicTuple>& tuples,
                                       const std::optional<ConfusionMatrices>& confusion,
                                       Rng& rng) {
    if (!confusion) return tuples;
    validate_confusion(*confusion);
    std::vector<DemographicTuple> out;
    out.reserve(tuples.size());
    for (const auto& t : tuples) {
        DemographicTuple o;
        o.gender_cat = static_cast<int>(
            rng.categorical((*confusion)[0][static_cast<std::size_t>(t.gender_cat)]));
        o.age_cat = static_cast<int>(
            rng.categorical((*confusion)[1][static_cast<std::size_t>(t.age_cat)]));
        o.race_cat = static_cast<int>(
            rng.categorical((*confusion)[2][static_cast<std::size_t>(t.race_cat)]));
        out.push_back(o);
    }
    return out;
}

double ppo_clip_loss(double new_logprob, double old_logprob, double advantage, double gamma) {
    const double ratio = std::exp(new_logprob - old_logprob);
    return std::max(-ratio * advantage,
                    -std::clamp(ratio, 1.0 - gamma, 1.0 + gamma) * advantage);
}

double kl_divergence(const Policy& policy, const Policy& ref_policy, int prompt_context) {
    double total = 0.0;
    for (int a = 0; a < kAttributeCount; ++a) {
        const auto p = policy.probs(prompt_context, static_cast<AttributeId>(a));
        const auto q = ref_policy.probs(prompt_context, static_cast<AttributeId>(a));
        for (std::size_t j = 0; j < p.size(); ++j)
            total += p[j] * (std::log(p[j]) - std::log(q[j]));
    }
    return total;
}

double total_loss(double policy_loss, double kl_loss, double beta, int timesteps) {
    if (timesteps < 1) throw ValidationError("total_loss: timesteps must be at least 1");
    return (policy_loss + beta * kl_loss) / static_cast<double>(timesteps);
}

LogitGrads zero_grads_like(const Policy& policy) {
    LogitGrads g(policy.logits.size());
    for (std::size_t c = 0; c < g.size(); ++c)
        for (int a = 0; a < kAttributeCount; ++a)
            g[c][a].assign(policy.logits[c][a].size(), 0.0);
    return g;
}

double global_norm(const LogitGrads& grads) {
    double sq = 0.0;
    for (const auto& ctx : grads)
        for (const auto& attr : ctx)
            for (double v : attr) sq += v * v;
    return std::sqrt(sq);
}

MinibatchLosses minibatch_loss(const Policy& policy, const Policy& ref_policy,
                               const std::vector<SampleRecord>& batch, double beta, double gamma) {
    return accumulate_minibatch(policy, ref_policy, batch, beta, gamma, nullptr);
}

LogitGrads minibatch_grads(const Policy& policy, const Policy& ref_policy,
                           const std::vector<SampleRecord>& batch, double beta, double gamma) {
    LogitGrads grads = zero_grads_like(policy);
    accumulate_minibatch(policy, ref_policy, batch, beta, gamma, &grads);
    return grads;
}

MetricsReport evaluate_policy(const Policy& policy, long long samples, std::uint64_t seed,
                              double eps) {
    policy.validate();
    if (samples < policy.contexts())
        throw ValidationError("evaluate_policy: need at least one sample per context");
    Rng rng(seed);
    const Taxonomy taxonomy = Taxonomy::builtin();

    std::array<std::vector<long long>, kAttributeCount> counts;
    for (int a = 0; a < kAttributeCount; ++a)
        counts[a].assign(static_cast<std::size_t>(kCategoryCounts[a]), 0);

    const long long per_context = samples / policy.contexts();
    for (int c = 0; c < policy.contexts(); ++c) {
        std::array<std::vector<double>, kAttributeCount> p;
        for (int a = 0; a < kAttributeCount; ++a)
            p[a] = policy.probs(c, static_cast<AttributeId>(a));
        for (long long i = 0; i < per_context; ++i)
            for (int a = 0; a < kAttributeCount; ++a)
                ++counts[a][rng.categorical(p[a])];
    }

    MetricsReport report;
    report.epsilon = eps;
    for (const auto& attr : taxonomy.attributes()) {
        const auto& cnt = counts[static_cast<int>(attr.id)];
        long long total = std::accumulate(cnt.begin(), cnt.end(), 0LL);
        CategoricalDistribution dist;
        dist.attribute = attr.id;
        dist.support_count = total;
        dist.probs.resize(cnt.size());
        for (std::size_t j = 0; j < cnt.size(); ++j)
            dist.probs[j] = static_cast<double>(cnt[j]) / static_cast<double>(total);
        report.per_attribute_entropy_neutral[attr.name] = normalized_entropy(dist);
    }
    report.id_score = intrinsic_diversity(report.per_attribute_entropy_neutral, eps, taxonomy);
    return report;
}

Trajectory train(const SimConfig& config, const RewardConfig& reward_config,
                 const Policy& ref_policy) {
    config.validate();
    ref_policy.validate();
    const Taxonomy taxonomy = Taxonomy::builtin();
    reward_config.validate(taxonomy);
    if (ref_policy.contexts() != config.contexts)
        throw ValidationError("train: reference policy context count must match the config");

    Policy policy = ref_policy;
    RunningStats stats(RunningStats::Mode::ema, config.stats_decay);
    Rng master(config.seed);

    Trajectory traj;
    long long updates = 0;
    double smoothed = 0.0;
    bool have_smoothed = false;
    double best_smoothed = -std::numeric_limits<double>::infinity();
    long long run_below = 0;

    const auto n = config.group_size;
    for (long long epoch = 0; epoch < config.epochs; ++epoch) {
        // phase 1: sampling + reward + advantage
        std::vector<SampleRecord> buffer;
        buffer.reserve(static_cast<std::size_t>(config.contexts * config.sampling_batches * n));
        for (int c = 0; c < config.contexts; ++c) {
            for (long long b = 0; b < config.sampling_batches; ++b) {
                SampledGroup group = sample_group(policy, c, n, master);
                const auto observed = classify(group.tuples, config.classifier_noise, master);

                std::vector<ImageAssignment> assignments(observed.size());
                for (std::size_t i = 0; i < observed.size(); ++i) {
                    assignments[i].image_id = std::to_string(i);
                    assignments[i].category = {observed[i].gender_cat, observed[i].age_cat,
                                               observed[i].race_cat};
                }
                const GroupCounts counts =
                    counts_from_assignments(context_key(c), assignments, taxonomy);
                const auto reward_map =
                    group_rewards(counts, assignments, reward_config, taxonomy);

                std::vector<double> rewards(observed.size());
                for (std::size_t i = 0; i < observed.size(); ++i)
                    rewards[i] = reward_map.at(assignments[i].image_id);

                std::array<double, kAttributeCount> batch_adv{};
                std::vector<double> group_adv(rewards.size(), 0.0);
                if (config.batch_normalize_advantage) {
                    double mean = 0.0;
                    for (double r : rewards) mean += r;
                    mean /= static_cast<double>(rewards.size());
                    double var = 0.0;
                    for (double r : rewards) var += (r - mean) * (r - mean);
                    var /= static_cast<double>(rewards.size());
                    const double sd = std::sqrt(var);
                    for (std::size_t i = 0; i < rewards.size(); ++i)
                        group_adv[i] = (rewards[i] - mean) / (sd + reward_config.epsilon);
                }

                for (std::size_t i = 0; i < group.tuples.size(); ++i) {
                    SampleRecord rec;
                    rec.context = c;
                    rec.tuple = group.tuples[i];
                    rec.old_logprob = group.logprobs[i];
                    rec.reward = rewards[i];
                    if (config.batch_normalize_advantage) {
                        batch_adv.fill(group_adv[i]);
                        rec.advantage = batch_adv;
                    } else {
                        for (int t = 0; t < config.timesteps; ++t)
                            rec.advantage[t] = stats.observe(context_key(c), t, rewards[i],
                                                             reward_config.epsilon);
                    }
                    buffer.push_back(std::move(rec));
                }
            }
        }

        // phase 2: inner policy-update epochs over shuffled minibatches
        for (long long inner = 0; inner < config.inner_epochs; ++inner) {
            std::vector<std::size_t> order(buffer.size());
            std::iota(order.begin(), order.end(), 0);
            master.shuffle(order);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(config.train_batch)) {
                const std::size_t stop =
                    std::min(order.size(), start + static_cast<std::size_t>(config.train_batch));
                std::vector<SampleRecord> minibatch;
                minibatch.reserve(stop - start);
                for (std::size_t j = start; j < stop; ++j) minibatch.push_back(buffer[order[j]]);

                LogitGrads grads = zero_grads_like(policy);
                const MinibatchLosses losses = accumulate_minibatch(
                    policy, ref_policy, minibatch, config.kl_coeff, config.ppo_clip, &grads);

                const double norm = global_norm(grads);
                if (norm > config.max_grad_norm) {
                    const double scale = config.max_grad_norm / norm;
                    for (auto& ctx : grads)
                        for (auto& attr : ctx)
                            for (double& v : attr) v *= scale;
                }
                for (int c = 0; c < config.contexts; ++c)
                    for (int a = 0; a < kAttributeCount; ++a)
                        for (std::size_t j = 0; j < policy.logits[static_cast<std::size_t>(c)][a].size(); ++j)
                            policy.logits[static_cast<std::size_t>(c)][a][j] -=
                                config.learning_rate * grads[static_cast<std::size_t>(c)][a][j];

                ++updates;
                double mean_reward = 0.0;
                for (const auto& rec : minibatch) mean_reward += rec.reward;
                mean_reward /= static_cast<double>(minibatch.size());
                smoothed = have_smoothed
                               ? config.smooth_decay * smoothed +
                                     (1.0 - config.smooth_decay) * mean_reward
                               : mean_reward;
                have_smoothed = true;

                traj.updates.push_back({updates, epoch, smoothed, losses.policy_loss,
                                        losses.kl_loss, losses.total});

                if (smoothed < best_smoothed - config.divergence_tolerance) {
                    if (++run_below >= config.divergence_patience) {
                        traj.warnings.push_back(
                            {updates, "smoothed reward stayed more than " +
                                          std::to_string(config.divergence_tolerance) +
                                          " below its best for " +
                                          std::to_string(config.divergence_patience) +
                                          " consecutive updates"});
                        run_below = 0;
                        best_smoothed = smoothed;
                    }
                } else {
                    run_below = 0;
                    best_smoothed = std::max(best_smoothed, smoothed);
                }

                if (updates % config.checkpoint_interval == 0) {
                    const MetricsReport report =
                        evaluate_policy(policy, config.eval_samples,
                                        mix_seed(config.seed, 0x10000000ULL + static_cast<std::uint64_t>(updates)),
                                        reward_config.epsilon);
                    traj.checkpoints.push_back({updates, report.id_score, smoothed, report});
                }
            }
        }
    }

    double kl = 0.0;
    for (int c = 0; c < config.contexts; ++c) kl += kl_divergence(policy, ref_policy, c);
    traj.final_kl = kl / static_cast<double>(config.contexts);
    traj.final_policy = std::move(policy);
    return traj;
}

}  // namespace fairkit
