#include "fairkit/cli.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairkit/errors.hpp"
#include "fairkit/freqview.hpp"
#include "fairkit/labels.hpp"
#include "fairkit/metrics.hpp"
#include "fairkit/png_io.hpp"
#include "fairkit/prompts.hpp"
#include "fairkit/reward.hpp"
#include "fairkit/sim.hpp"
#include "fairkit/taxonomy.hpp"

namespace fairkit {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

json load_json(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

struct TaxonomyChoice {
    Taxonomy taxonomy;
    std::string source;  // file path, empty for builtin
};

// Priority: --taxonomy flag, FAIRKIT_TAXONOMY env var, builtin.
TaxonomyChoice resolve_taxonomy(const std::string& flag) {
    std::string path = flag;
    if (path.empty()) {
        const char* env = std::getenv("FAIRKIT_TAXONOMY");
        if (env != nullptr && *env != '\0') path = env;
    }
    if (path.empty()) return {Taxonomy::builtin(), ""};
    return {Taxonomy::load(path), path};
}

void add_input(RunManifest& man, const std::string& role, const std::string& path) {
    if (path.empty()) return;
    man.inputs.push_back({role, path, file_digest(path)});
}

void emit_manifest(const RunManifest& man, const std::string& beside) {
    write_text(beside + ".manifest.json", man.to_json().dump(2) + "\n");
}

// No --out: result goes to stdout and no sidecar is written.
void emit_result(const std::string& out, const std::string& content, const RunManifest& man) {
    if (out.empty()) {
        std::cout << content;
        return;
    }
    write_text(out, content);
    emit_manifest(man, out);
}

void check_tau_eps(double tau, double eps) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
    if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
}

// prompt id -> evaluation context ("neutral" or trigger head word), read
// from prompt-set JSONL metadata.
std::map<std::string, std::string> prompt_contexts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::map<std::string, std::string> contexts;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no) + ": ";
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError(where + e.what());
        }
        try {
            const std::string id = doc.at("id").get<std::string>();
            const std::string kind = doc.at("kind").get<std::string>();
            if (kind == "eval_neutral") {
                contexts[id] = "neutral";
            } else if (kind == "eval_trigger") {
                contexts[id] = doc.at("trigger").get<std::string>();
            } else {
                throw ValidationError(where + "prompt kind '" + kind +
                                      "' has no evaluation context");
            }
        } catch (const json::exception& e) {
            throw ValidationError(where + e.what());
        }
    }
    return contexts;
}

std::map<std::string, std::vector<LabelRecord>> load_label_groups(const std::string& labels_path,
                                                                  const std::string& prompts_path,
                                                                  const Taxonomy& taxonomy) {
    std::ifstream in(labels_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + labels_path);
    const std::vector<LabelRecord> records = labels_path.ends_with(".csv")
                                                 ? parse_labels_csv(in, taxonomy)
                                                 : parse_labels(in, taxonomy);
    std::map<std::string, std::string> id_context;
    const bool mapped = !prompts_path.empty();
    if (mapped) id_context = prompt_contexts(prompts_path);

    std::map<std::string, std::vector<LabelRecord>> groups;
    for (const auto& record : records) {
        std::string context;
        if (mapped) {
            auto it = id_context.find(record.prompt_id);
            if (it == id_context.end())
                throw ValidationError("label prompt_id '" + record.prompt_id +
                                      "' not present in " + prompts_path);
            context = it->second;
        } else {
            if (record.prompt_id != "neutral" && !taxonomy.is_trigger(record.prompt_id))
                throw ValidationError("prompt_id '" + record.prompt_id +
                                      "' is neither 'neutral' nor a trigger; pass --prompts to "
                                      "map ids to contexts");
            context = record.prompt_id;
        }
        groups[context].push_back(record);
    }
    if (groups.empty()) throw ValidationError("no label records in " + labels_path);
    return groups;
}

std::map<std::string, double> context_entropies(const std::vector<LabelRecord>& records,
                                                const std::string& context, double tau,
                                                const Taxonomy& taxonomy) {
    std::map<std::string, double> entropies;
    for (const auto& attr : taxonomy.attributes()) {
        try {
            entropies[attr.name] =
                normalized_entropy(empirical_distribution(records, attr.id, tau, taxonomy));
        } catch (const ValidationError& e) {
            throw ValidationError("context '" + context + "', attribute '" + attr.name +
                                  "': " + e.what());
        }
    }
    return entropies;
}

std::string format_double(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

// ---------------------------------------------------------------- eval ----

struct EvalOpts {
    std::string labels;
    std::string prompts;
    std::string taxonomy;
    std::string out;
    std::string csv;
    std::string model = "model";
    double q = 0.1;
    double tau = 0.0;
    double epsilon = kDefaultEpsilon;
    bool manifest_only = false;
};

void run_eval(const EvalOpts& o) {
    check_tau_eps(o.tau, o.epsilon);
    if (!(o.q > 0.0 && o.q < 1.0)) throw ValidationError("q must lie in (0, 1)");
    const TaxonomyChoice tax = resolve_taxonomy(o.taxonomy);

    RunManifest man;
    man.subcommand = "eval";
    man.config = {{"q", o.q},
                  {"tau", o.tau},
                  {"epsilon", o.epsilon},
                  {"model", o.model},
                  {"taxonomy", tax.source.empty() ? "builtin" : tax.source}};
    add_input(man, "labels", o.labels);
    add_input(man, "prompts", o.prompts);
    add_input(man, "taxonomy", tax.source);
    if (o.manifest_only) {
        std::cout << man.to_json().dump(2) << "\n";
        return;
    }

    const auto groups = load_label_groups(o.labels, o.prompts, tax.taxonomy);
    auto neutral = groups.find("neutral");
    if (neutral == groups.end())
        throw ValidationError("no neutral prompt group present; cannot estimate ID");

    MetricsReport report;
    report.q = o.q;
    report.epsilon = o.epsilon;
    report.per_attribute_entropy_neutral =
        context_entropies(neutral->second, "neutral", o.tau, tax.taxonomy);
    report.id_score =
        intrinsic_diversity(report.per_attribute_entropy_neutral, o.epsilon, tax.taxonomy);

    std::map<std::string, std::map<std::string, double>> per_trigger;
    for (const auto& [context, records] : groups) {
        if (context == "neutral") continue;
        per_trigger[context] = context_entropies(records, context, o.tau, tax.taxonomy);
    }
    if (per_trigger.empty()) {
        std::cerr << "warning: no trigger prompt groups; conditional fields omitted\n";
    } else {
        report.per_trigger_g = conditional_scores(per_trigger, tax.taxonomy);
        std::vector<double> g;
        g.reserve(report.per_trigger_g.size());
        for (const auto& [trigger, score] : report.per_trigger_g) g.push_back(score);
        report.ca_q = ca_quantile(g, o.q);
        report.ca_mean = ca_mean(g);
        report.mgbi = mgbi(report.id_score, *report.ca_q, o.epsilon);
    }

    emit_result(o.out, report.to_json().dump(2) + "\n", man);
    if (!o.csv.empty()) {
        write_text(o.csv, MetricsReport::csv_header() + "\n" + report.csv_row(o.model) + "\n");
        emit_manifest(man, o.csv);
    }
}

// ----------------------------------------------------------- bootstrap ----

struct BootstrapOpts {
    std::string labels;
    std::string scores;
    std::string prompts;
    std::string taxonomy;
    std::string out;
    std::string statistic = "mean";
    double q = 0.1;
    double tau = 0.0;
    double confidence = 0.95;
    double epsilon = kDefaultEpsilon;
    long long replicates = 10000;
    std::uint64_t seed = 42;
    bool manifest_only = false;
};

std::vector<double> scores_from_file(const std::string& path) {
    json doc = load_json(path);
    if (doc.is_object() && doc.contains("scores")) doc = doc.at("scores");
    if (!doc.is_array()) throw ValidationError(path + ": expected an array of scores");
    std::vector<double> scores;
    scores.reserve(doc.size());
    for (const auto& v : doc) {
        if (!v.is_number()) throw ValidationError(path + ": non-numeric score entry");
        scores.push_back(v.get<double>());
    }
    return scores;
}

void run_bootstrap(const BootstrapOpts& o) {
    check_tau_eps(o.tau, o.epsilon);
    if (o.labels.empty() == o.scores.empty())
        throw ValidationError("pass exactly one of --labels or --scores");
    BootstrapStatistic statistic;
    if (o.statistic == "mean") {
        statistic = BootstrapStatistic::mean;
    } else if (o.statistic == "quantile") {
        statistic = BootstrapStatistic::quantile;
    } else {
        throw ValidationError("unknown statistic '" + o.statistic + "' (mean | quantile)");
    }
    const TaxonomyChoice tax = resolve_taxonomy(o.taxonomy);

    RunManifest man;
    man.subcommand = "bootstrap";
    man.seed = o.seed;
    man.config = {{"statistic", o.statistic},
                  {"q", o.q},
                  {"tau", o.tau},
                  {"confidence", o.confidence},
                  {"replicates", o.replicates},
                  {"epsilon", o.epsilon},
                  {"taxonomy", tax.source.empty() ? "builtin" : tax.source}};
    add_input(man, "labels", o.labels);
    add_input(man, "scores", o.scores);
    add_input(man, "prompts", o.prompts);
    add_input(man, "taxonomy", tax.source);
    if (o.manifest_only) {
        std::cout << man.to_json().dump(2) << "\n";
        return;
    }

    std::vector<double> scores;
    if (!o.scores.empty()) {
        scores = scores_from_file(o.scores);
    } else {
        const auto groups = load_label_groups(o.labels, o.prompts, tax.taxonomy);
        std::map<std::string, std::map<std::string, double>> per_trigger;
        for (const auto& [context, records] : groups) {
            if (context == "neutral") continue;
            per_trigger[context] = context_entropies(records, context, o.tau, tax.taxonomy);
        }
        if (per_trigger.empty())
            throw ValidationError("no trigger prompt groups; nothing to resample");
        for (const auto& [trigger, score] : conditional_scores(per_trigger, tax.taxonomy))
            scores.push_back(score);
    }

    const BootstrapResult result =
        bootstrap_ci(scores, statistic, o.q, o.replicates, o.confidence, o.seed);
    json doc = result.to_json();
    doc["statistic"] = o.statistic;
    if (statistic == BootstrapStatistic::quantile) doc["q"] = o.q;
    emit_result(o.out, doc.dump(2) + "\n", man);
}

// -------------------------------------------------------------- reward ----

struct RewardOpts {
    std::string counts;
    std::string targets;
    std::string weights = "1:1:1";
    std::string taxonomy;
    std::string out;
    double epsilon = kDefaultEpsilon;
    double r_min = -5.0;
    double r_max = 5.0;
    bool curve = false;
    double n = 20.0;
    long long categories = 2;
    long long steps_per_unit = 4;
    bool manifest_only = false;
};

std::array<double, kAttributeCount> parse_weights(const std::string& spec) {
    std::array<double, kAttributeCount> weights{};
    std::stringstream stream(spec);
    std::string part;
    int i = 0;
    while (std::getline(stream, part, ':')) {
        if (i >= kAttributeCount) throw ValidationError("weights: expected gender:age:race");
        try {
            std::size_t used = 0;
            weights[i] = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ValidationError("weights: cannot parse '" + part + "'");
        }
        ++i;
    }
    if (i != kAttributeCount) throw ValidationError("weights: expected gender:age:race");
    return weights;
}

RewardConfig build_reward_config(const RewardOpts& o, const Taxonomy& taxonomy) {
    RewardConfig config;
    config.epsilon = o.epsilon;
    config.r_min = o.r_min;
    config.r_max = o.r_max;
    config.weights = parse_weights(o.weights);
    if (!o.targets.empty()) {
        const json doc = load_json(o.targets);
        config.target_mode = TargetMode::explicit_targets;
        for (const auto& attr : taxonomy.attributes()) {
            if (!doc.contains(attr.name))
                throw ValidationError(o.targets + ": missing targets for '" + attr.name + "'");
            config.targets[static_cast<int>(attr.id)] =
                doc.at(attr.name).get<std::vector<double>>();
        }
    }
    config.validate(taxonomy);
    return config;
}

json reward_config_to_json(const RewardConfig& config, const Taxonomy& taxonomy) {
    json doc = {{"epsilon", config.epsilon},
                {"r_min", config.r_min},
                {"r_max", config.r_max},
                {"weights", config.weights},
                {"target_mode",
                 config.target_mode == TargetMode::uniform ? "uniform" : "explicit"}};
    if (config.target_mode == TargetMode::explicit_targets) {
        json targets = json::object();
        for (const auto& attr : taxonomy.attributes())
            targets[attr.name] = config.targets[static_cast<int>(attr.id)];
        doc["targets"] = targets;
    }
    return doc;
}

GroupCounts counts_from_json(const json& doc, const std::string& path, const Taxonomy& taxonomy) {
    GroupCounts counts;
    try {
        counts.prompt_id = doc.at("prompt_id").get<std::string>();
        counts.group_size = doc.at("group_size").get<long long>();
        const json& per_attr = doc.at("counts");
        for (const auto& attr : taxonomy.attributes()) {
            if (!per_attr.contains(attr.name))
                throw ValidationError(path + ": counts missing '" + attr.name + "'");
            counts.per_attribute[static_cast<int>(attr.id)] =
                per_attr.at(attr.name).get<std::vector<long long>>();
        }
        if (doc.contains("abstained")) {
            const json& abstained = doc.at("abstained");
            for (const auto& attr : taxonomy.attributes())
                counts.abstained[static_cast<int>(attr.id)] =
                    abstained.value(attr.name, static_cast<long long>(0));
        }
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    if (counts.group_size < 1) throw ValidationError(path + ": group_size must be >= 1");
    for (const auto& attr : taxonomy.attributes()) {
        const int a = static_cast<int>(attr.id);
        if (counts.per_attribute[a].size() != attr.categories.size())
            throw ValidationError(path + ": '" + attr.name + "' expects " +
                                  std::to_string(attr.categories.size()) + " counts");
        long long total = counts.abstained[a];
        if (total < 0) throw ValidationError(path + ": negative abstained for '" + attr.name + "'");
        for (long long c : counts.per_attribute[a]) {
            if (c < 0) throw ValidationError(path + ": negative count for '" + attr.name + "'");
            total += c;
        }
        if (total != counts.group_size)
            throw ValidationError(path + ": '" + attr.name +
                                  "' counts plus abstained must equal group_size");
    }
    return counts;
}

std::vector<ImageAssignment> assignments_from_json(const json& doc, const std::string& path,
                                                   const Taxonomy& taxonomy) {
    std::vector<ImageAssignment> assignments;
    for (const auto& entry : doc) {
        ImageAssignment a;
        try {
            a.image_id = entry.at("image_id").get<std::string>();
        } catch (const json::exception& e) {
            throw ValidationError(path + ": " + e.what());
        }
        for (const auto& attr : taxonomy.attributes()) {
            if (!entry.contains(attr.name) || entry.at(attr.name).is_null()) continue;
            const std::string category = entry.at(attr.name).get<std::string>();
            const int index = taxonomy.category_index(attr.id, category);
            if (index < 0)
                throw ValidationError(path + ": unknown " + attr.name + " category '" + category +
                                      "'");
            a.category[static_cast<int>(attr.id)] = index;
        }
        assignments.push_back(std::move(a));
    }
    return assignments;
}

void run_reward(const RewardOpts& o) {
    const TaxonomyChoice tax = resolve_taxonomy(o.taxonomy);
    const RewardConfig config = build_reward_config(o, tax.taxonomy);

    RunManifest man;
    man.subcommand = "reward";
    man.config = reward_config_to_json(config, tax.taxonomy);
    man.config["taxonomy"] = tax.source.empty() ? "builtin" : tax.source;
    if (o.curve) {
        man.config["curve"] = {{"n", o.n},
                               {"categories", o.categories},
                               {"steps_per_unit", o.steps_per_unit}};
    }
    add_input(man, "counts", o.counts);
    add_input(man, "targets", o.targets);
    add_input(man, "taxonomy", tax.source);
    if (o.manifest_only) {
        std::cout << man.to_json().dump(2) << "\n";
        return;
    }

    if (o.curve) {
        if (o.categories < 2) throw ValidationError("curve: need at least 2 categories");
        if (o.steps_per_unit < 1) throw ValidationError("curve: steps-per-unit must be >= 1");
        const auto points = reward_curve(o.n, static_cast<std::size_t>(o.categories), config,
                                         static_cast<std::size_t>(o.steps_per_unit));
        std::string csv = "n_k,reward\n";
        for (const auto& p : points)
            csv += format_double(p.n_k, 6) + "," + format_double(p.reward, 6) + "\n";
        emit_result(o.out, csv, man);
        return;
    }

    if (o.counts.empty()) throw ValidationError("pass --counts, or --curve for the sweep");
    const json doc = load_json(o.counts);
    const GroupCounts counts = counts_from_json(doc, o.counts, tax.taxonomy);

    const RewardTable table = reward_table(counts, config, tax.taxonomy);
    json table_doc = json::object();
    for (const auto& attr : tax.taxonomy.attributes())
        table_doc[attr.name] = table[static_cast<int>(attr.id)];
    json out_doc = {{"prompt_id", counts.prompt_id},
                    {"group_size", counts.group_size},
                    {"table", table_doc}};
    if (doc.contains("assignments")) {
        const auto assignments =
            assignments_from_json(doc.at("assignments"), o.counts, tax.taxonomy);
        out_doc["per_image"] = group_rewards(counts, assignments, config, tax.taxonomy);
    }
    emit_result(o.out, out_doc.dump(2) + "\n", man);
}

// ------------------------------------------------------------ simulate ----

struct SimulateOpts {
    std::string config;
    std::string ref_policy = "biased-all";
    std::string out;
    std::string csv;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool manifest_only = false;
};

RewardConfig reward_config_from_json(const json& doc, const Taxonomy& taxonomy) {
    RewardConfig config;
    config.epsilon = doc.value("epsilon", config.epsilon);
    config.r_min = doc.value("r_min", config.r_min);
    config.r_max = doc.value("r_max", config.r_max);
    if (doc.contains("weights")) {
        const auto weights = doc.at("weights").get<std::vector<double>>();
        if (weights.size() != kAttributeCount)
            throw ValidationError("reward weights: expected 3 entries");
        for (int i = 0; i < kAttributeCount; ++i) config.weights[i] = weights[i];
    }
    if (doc.contains("targets")) {
        config.target_mode = TargetMode::explicit_targets;
        for (const auto& attr : taxonomy.attributes()) {
            if (!doc.at("targets").contains(attr.name))
                throw ValidationError("reward targets: missing '" + attr.name + "'");
            config.targets[static_cast<int>(attr.id)] =
                doc.at("targets").at(attr.name).get<std::vector<double>>();
        }
    }
    config.validate(taxonomy);
    return config;
}

Policy resolve_ref_policy(const std::string& spec, int contexts) {
    if (spec == "uniform" || spec == "biased-gender" || spec == "biased-all")
        return Policy::preset(spec, contexts);
    const Policy policy = Policy::from_json(load_json(spec));
    if (policy.contexts() != contexts)
        throw ValidationError(spec + ": policy has " + std::to_string(policy.contexts()) +
                              " contexts, config expects " + std::to_string(contexts));
    return policy;
}

void run_simulate(const SimulateOpts& o) {
    const Taxonomy taxonomy = Taxonomy::builtin();
    SimConfig config;
    RewardConfig reward_config;
    if (!o.config.empty()) {
        const json doc = load_json(o.config);
        try {
            if (doc.contains("sim")) config = SimConfig::from_json(doc.at("sim"));
            if (doc.contains("reward"))
                reward_config = reward_config_from_json(doc.at("reward"), taxonomy);
        } catch (const json::exception& e) {
            throw ValidationError(o.config + ": " + e.what());
        }
    }
    if (o.seed_set) config.seed = o.seed;
    config.validate();
    reward_config.validate(taxonomy);

    RunManifest man;
    man.subcommand = "simulate";
    man.seed = config.seed;
    man.config = {{"sim", config.to_json()},
                  {"reward", reward_config_to_json(reward_config, taxonomy)},
                  {"ref_policy", o.ref_policy}};
    add_input(man, "config", o.config);
    if (o.ref_policy != "uniform" && o.ref_policy != "biased-gender" &&
        o.ref_policy != "biased-all")
        add_input(man, "ref_policy", o.ref_policy);
    if (o.manifest_only) {
        std::cout << man.to_json().dump(2) << "\n";
        return;
    }

    const Policy ref = resolve_ref_policy(o.ref_policy, config.contexts);
    const Trajectory trajectory = train(config, reward_config, ref);

    std::string jsonl;
    std::size_t cp = 0;
    std::size_t warn = 0;
    for (const auto& update : trajectory.updates) {
        json line = update.to_json();
        line["type"] = "update";
        jsonl += line.dump() + "\n";
        while (warn < trajectory.warnings.size() &&
               trajectory.warnings[warn].update <= update.update) {
            json w = trajectory.warnings[warn].to_json();
            w["type"] = "warning";
            jsonl += w.dump() + "\n";
            ++warn;
        }
        while (cp < trajectory.checkpoints.size() &&
               trajectory.checkpoints[cp].update <= update.update) {
            json c = trajectory.checkpoints[cp].to_json();
            c["type"] = "checkpoint";
            jsonl += c.dump() + "\n";
            ++cp;
        }
    }
    json summary = {{"type", "summary"},
                    {"updates", trajectory.updates.size()},
                    {"checkpoints", trajectory.checkpoints.size()},
                    {"warnings", trajectory.warnings.size()},
                    {"final_kl", trajectory.final_kl},
                    {"final_policy", trajectory.final_policy.to_json()}};
    if (!trajectory.checkpoints.empty())
        summary["final_fairness"] = trajectory.checkpoints.back().fairness;
    jsonl += summary.dump() + "\n";

    emit_result(o.out, jsonl, man);
    if (!o.csv.empty()) {
        std::string csv = "update,epoch,policy_loss,kl_loss,total_loss,smoothed_reward\n";
        for (const auto& u : trajectory.updates) {
            csv += std::to_string(u.update) + "," + std::to_string(u.epoch) + "," +
                   format_double(u.policy_loss, 6) + "," + format_double(u.kl_loss, 6) + "," +
                   format_double(u.total_loss, 6) + "," + format_double(u.smoothed_reward, 6) +
                   "\n";
        }
        write_text(o.csv, csv);
        emit_manifest(man, o.csv);
    }
}

// ------------------------------------------------------------- prompts ----

struct PromptsOpts {
    std::string kind;
    std::string pools;
    std::string vocabulary;
    std::string taxonomy;
    std::string out;
    std::uint64_t seed = 42;
    long long n = 10000;
    bool manifest_only = false;
};

std::vector<std::string> vocabulary_from_file(const std::string& path) {
    json doc = load_json(path);
    if (doc.is_object() && doc.contains("vocabulary")) doc = doc.at("vocabulary");
    if (!doc.is_array()) throw ValidationError(path + ": expected an array of terms");
    std::vector<std::string> terms;
    for (const auto& v : doc) {
        if (!v.is_string()) throw ValidationError(path + ": non-string vocabulary entry");
        terms.push_back(v.get<std::string>());
    }
    return terms;
}

void run_prompts(const PromptsOpts& o) {
    if (o.kind != "gen" && o.kind != "eval" && o.kind != "train")
        throw ValidationError("unknown prompt set kind '" + o.kind + "' (gen | eval | train)");
    if (!o.vocabulary.empty() && o.kind != "train")
        throw ValidationError("--vocabulary applies to the train set only");
    const TaxonomyChoice tax = resolve_taxonomy(o.taxonomy);
    const PromptPools pools = o.pools.empty() ? PromptPools::builtin() : PromptPools::load(o.pools);

    RunManifest man;
    man.subcommand = "prompts";
    man.seed = o.seed;
    man.config = {{"kind", o.kind},
                  {"seed", o.seed},
                  {"pools", o.pools.empty() ? "builtin" : o.pools},
                  {"taxonomy", tax.source.empty() ? "builtin" : tax.source}};
    if (o.kind == "train") {
        man.config["n"] = o.n;
        man.config["vocabulary"] = o.vocabulary.empty() ? "neutral-only" : o.vocabulary;
    }
    add_input(man, "pools", o.pools);
    add_input(man, "vocabulary", o.vocabulary);
    add_input(man, "taxonomy", tax.source);
    if (o.manifest_only) {
        std::cout << man.to_json().dump(2) << "\n";
        return;
    }

    PromptSet set;
    if (o.kind == "gen") {
        set = build_gen_set(o.seed, pools, tax.taxonomy);
    } else if (o.kind == "eval") {
        set = build_eval_set(o.seed, pools, tax.taxonomy);
    } else {
        const std::vector<std::string> vocabulary =
            o.vocabulary.empty() ? std::vector<std::string>{} : vocabulary_from_file(o.vocabulary);
        set = build_train_set(o.n, o.seed, vocabulary, pools, tax.taxonomy);
    }

    std::string jsonl;
    for (const auto& prompt : set.prompts) jsonl += prompt.to_json().dump() + "\n";
    emit_result(o.out, jsonl, man);
    std::cerr << set.prompts.size() << " " << o.kind << " prompts\n";
}

// ------------------------------------------------------------ freqview ----

struct FreqviewOpts {
    std::string in;
    std::string out;
    std::string bands;
    std::string raw;
    bool manifest_only = false;
};

json plane_to_json(const ImagePlane& plane) {
    return {{"height", plane.height}, {"width", plane.width}, {"values", plane.pixels}};
}

ImagePlane normalized_copy(const ImagePlane& plane) {
    double lo = plane.pixels.front();
    double hi = lo;
    for (double v : plane.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    ImagePlane out(plane.height, plane.width);
    if (hi > lo) {
        for (std::size_t i = 0; i < plane.pixels.size(); ++i)
            out.pixels[i] = (plane.pixels[i] - lo) / (hi - lo);
    }
    return out;
}

void run_freqview(const FreqviewOpts& o) {
    if (o.out.empty() && o.bands.empty() && o.raw.empty())
        throw ValidationError("nothing to produce; pass --out, --bands, or --raw");

    RunManifest man;
    man.subcommand = "freqview";
    man.config = {{"in", o.in},
                  {"grayscale_weights", {0.299, 0.587, 0.114}},
                  {"wavelet", "db4"},
                  {"extension", "half-sample-symmetric"},
                  {"levels", 1}};
    add_input(man, "image", o.in);
    if (o.manifest_only) {
        std::cout << man.to_json().dump(2) << "\n";
        return;
    }

    const ChannelStack rgb = read_png_rgb(o.in);
    const ImagePlane gray = grayscale(rgb);
    const WaveletBands bands = dwt2_db4(gray);
    const ChannelStack view = frequency_view(gray);

    if (!o.out.empty()) {
        write_png_rgb(o.out, view);
        emit_manifest(man, o.out);
    }
    if (!o.bands.empty()) {
        // bands are min-max normalized for inspection; --raw keeps the floats
        write_png_gray(o.bands + ".cA.png", normalized_copy(bands.cA));
        write_png_gray(o.bands + ".cH.png", normalized_copy(bands.cH));
        write_png_gray(o.bands + ".cV.png", normalized_copy(bands.cV));
        write_png_gray(o.bands + ".cD.png", normalized_copy(bands.cD));
        emit_manifest(man, o.bands);
    }
    if (!o.raw.empty()) {
        json doc = {{"view",
                     {{"height", view[0].height},
                      {"width", view[0].width},
                      {"channels",
                       {view[0].pixels, view[1].pixels, view[2].pixels}}}},
                    {"bands",
                     {{"cA", plane_to_json(bands.cA)},
                      {"cH", plane_to_json(bands.cH)},
                      {"cV", plane_to_json(bands.cV)},
                      {"cD", plane_to_json(bands.cD)}}}};
        write_text(o.raw, doc.dump() + "\n");
        emit_manifest(man, o.raw);
    }
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
    json inputs_doc = json::array();
    for (const auto& input : inputs)
        inputs_doc.push_back(
            {{"role", input.role}, {"path", input.path}, {"fnv1a64", input.digest}});
    return json{{"subcommand", subcommand},
                {"version", version},
                {"config", config},
                {"inputs", inputs_doc},
                {"seed", seed}};
}

std::string file_digest(const std::string& path) {
    return fnv1a64_hex(read_file(path));
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"demographic fairness metrics and diagnostics for image generators"};
    app.require_subcommand(1);

    auto eval_opts = std::make_shared<EvalOpts>();
    CLI::App* eval = app.add_subcommand("eval", "compute the metric suite from classifier labels");
    eval->add_option("--labels", eval_opts->labels, "label records (JSONL, or CSV by extension)")
        ->required();
    eval->add_option("--prompts", eval_opts->prompts,
                     "prompt-set JSONL mapping prompt ids to contexts");
    eval->add_option("--taxonomy", eval_opts->taxonomy, "taxonomy JSON (default: builtin)");
    eval->add_option("--out", eval_opts->out, "report JSON path (default: stdout)");
    eval->add_option("--csv", eval_opts->csv, "also write a one-row summary CSV");
    eval->add_option("--model", eval_opts->model, "model name for the CSV row");
    eval->add_option("--q", eval_opts->q, "conditional-alignment quantile")
        ->capture_default_str();
    eval->add_option("--tau", eval_opts->tau, "classifier confidence threshold")
        ->capture_default_str();
    eval->add_option("--epsilon", eval_opts->epsilon, "numerical floor")->capture_default_str();
    eval->add_flag("--manifest-only", eval_opts->manifest_only,
                   "print the run manifest and exit");
    eval->callback([eval_opts] { run_eval(*eval_opts); });

    auto boot_opts = std::make_shared<BootstrapOpts>();
    CLI::App* boot =
        app.add_subcommand("bootstrap", "percentile-bootstrap CI over per-context scores");
    boot->add_option("--labels", boot_opts->labels, "label records; scores derived per trigger");
    boot->add_option("--scores", boot_opts->scores, "precomputed scores (JSON array)");
    boot->add_option("--prompts", boot_opts->prompts,
                     "prompt-set JSONL mapping prompt ids to contexts");
    boot->add_option("--taxonomy", boot_opts->taxonomy, "taxonomy JSON (default: builtin)");
    boot->add_option("--statistic", boot_opts->statistic, "mean | quantile")
        ->capture_default_str();
    boot->add_option("--q", boot_opts->q, "quantile for --statistic quantile")
        ->capture_default_str();
    boot->add_option("--tau", boot_opts->tau, "classifier confidence threshold")
        ->capture_default_str();
    boot->add_option("--replicates", boot_opts->replicates, "bootstrap replicates")
        ->capture_default_str();
    boot->add_option("--confidence", boot_opts->confidence, "confidence level")
        ->capture_default_str();
    boot->add_option("--seed", boot_opts->seed, "bootstrap seed")->capture_default_str();
    boot->add_option("--epsilon", boot_opts->epsilon, "numerical floor")->capture_default_str();
    boot->add_option("--out", boot_opts->out, "result JSON path (default: stdout)");
    boot->add_flag("--manifest-only", boot_opts->manifest_only,
                   "print the run manifest and exit");
    boot->callback([boot_opts] { run_bootstrap(*boot_opts); });

    auto reward_opts = std::make_shared<RewardOpts>();
    CLI::App* reward =
        app.add_subcommand("reward", "group-balance rewards from per-group counts");
    reward->add_option("--counts", reward_opts->counts, "group counts JSON");
    reward->add_option("--targets", reward_opts->targets,
                       "target distribution JSON (default: uniform)");
    reward->add_option("--weights", reward_opts->weights, "attribute weights gender:age:race")
        ->capture_default_str();
    reward->add_option("--epsilon", reward_opts->epsilon, "log offset")->capture_default_str();
    reward->add_option("--rmin", reward_opts->r_min, "clip floor")->capture_default_str();
    reward->add_option("--rmax", reward_opts->r_max, "clip ceiling")->capture_default_str();
    reward->add_flag("--curve", reward_opts->curve, "emit the reward sweep CSV instead");
    reward->add_option("--n", reward_opts->n, "curve: group size")->capture_default_str();
    reward->add_option("--categories", reward_opts->categories, "curve: number of categories")
        ->capture_default_str();
    reward->add_option("--steps-per-unit", reward_opts->steps_per_unit, "curve: grid density")
        ->capture_default_str();
    reward->add_option("--taxonomy", reward_opts->taxonomy, "taxonomy JSON (default: builtin)");
    reward->add_option("--out", reward_opts->out, "output path (default: stdout)");
    reward->add_flag("--manifest-only", reward_opts->manifest_only,
                     "print the run manifest and exit");
    reward->callback([reward_opts] { run_reward(*reward_opts); });

    auto sim_opts = std::make_shared<SimulateOpts>();
    CLI::App* sim = app.add_subcommand("simulate", "group-relative policy training simulation");
    sim->add_option("--config", sim_opts->config, "config JSON with 'sim' and 'reward' sections");
    sim->add_option("--ref-policy", sim_opts->ref_policy,
                    "uniform | biased-gender | biased-all, or a policy JSON path")
        ->capture_default_str();
    CLI::Option* sim_seed = sim->add_option("--seed", sim_opts->seed, "override the config seed");
    sim->add_option("--out", sim_opts->out, "trajectory JSONL path (default: stdout)");
    sim->add_option("--csv", sim_opts->csv, "also write per-update losses as CSV");
    sim->add_flag("--manifest-only", sim_opts->manifest_only,
                  "print the run manifest and exit");
    sim->callback([sim_opts, sim_seed] {
        sim_opts->seed_set = sim_seed->count() > 0;
        run_simulate(*sim_opts);
    });

    auto prompt_opts = std::make_shared<PromptsOpts>();
    CLI::App* prompts = app.add_subcommand("prompts", "build gen / eval / train prompt sets");
    prompts->add_option("--kind", prompt_opts->kind, "gen | eval | train")->required();
    prompts->add_option("--seed", prompt_opts->seed, "sampling seed")->capture_default_str();
    prompts->add_option("--n", prompt_opts->n, "train set size")->capture_default_str();
    prompts->add_option("--pools", prompt_opts->pools, "component pools JSON (default: builtin)");
    prompts->add_option("--vocabulary", prompt_opts->vocabulary,
                        "train subject vocabulary JSON");
    prompts->add_option("--taxonomy", prompt_opts->taxonomy, "taxonomy JSON (default: builtin)");
    prompts->add_option("--out", prompt_opts->out, "prompt JSONL path (default: stdout)");
    prompts->add_flag("--manifest-only", prompt_opts->manifest_only,
                      "print the run manifest and exit");
    prompts->callback([prompt_opts] { run_prompts(*prompt_opts); });

    auto freq_opts = std::make_shared<FreqviewOpts>();
    CLI::App* freq = app.add_subcommand("freqview", "wavelet frequency view of a PNG image");
    freq->add_option("--in", freq_opts->in, "input PNG")->required();
    freq->add_option("--out", freq_opts->out, "3-channel frequency-view PNG");
    freq->add_option("--bands", freq_opts->bands,
                     "prefix for normalized cA/cH/cV/cD inspection PNGs");
    freq->add_option("--raw", freq_opts->raw, "raw float dump JSON path");
    freq->add_flag("--manifest-only", freq_opts->manifest_only,
                   "print the run manifest and exit");
    freq->callback([freq_opts] { run_freqview(*freq_opts); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace fairkit
