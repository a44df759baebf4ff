#include "fairkit/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fairkit/errors.hpp"
#include "fairkit/rng.hpp"

namespace fairkit {

namespace {

constexpr long long kVariantsPerCombination = 10;
constexpr long long kNeutralEvalCount = 300;
constexpr long long kPerTriggerCount = 50;
constexpr int kDedupeAttempts = 1000;

std::string age_display(const std::string& category) {
    return category == "middle" ? "middle-aged" : category;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
    return pool[rng.uniform_index(pool.size())];
}

PromptComponents sample_components(const std::string& subject, const PromptPools& pools,
                                   Rng& rng) {
    PromptComponents c;
    c.framing = pick(pools.framing, rng);
    c.subject = subject;
    c.style = pick(pools.style, rng);
    c.lighting = pick(pools.lighting, rng);
    c.background = pick(pools.background, rng);
    c.expression = pick(pools.expression, rng);
    return c;
}

Prompt finish_prompt(PromptComponents components, PromptKind kind, std::string subject_term,
                     std::string trigger, const PromptPools& pools) {
    Prompt p;
    p.text = render_prompt(components);
    p.id = hex64(fnv1a64(p.text));
    p.kind = kind;
    p.subject_term = std::move(subject_term);
    p.trigger = std::move(trigger);
    p.components = std::move(components);
    if (!p.trigger.empty()) {
        auto it = pools.negative_conflicts.find(p.trigger);
        if (it != pools.negative_conflicts.end()) p.negative_constraints = it->second;
    }
    return p;
}

// capacity of the component grammar for one fixed subject
long long variants_per_subject(const PromptPools& pools) {
    return static_cast<long long>(pools.framing.size()) *
           static_cast<long long>(pools.style.size()) *
           static_cast<long long>(pools.lighting.size()) *
           static_cast<long long>(pools.background.size()) *
           static_cast<long long>(pools.expression.size());
}

void append_unique(std::vector<Prompt>& prompts, std::set<std::string>& seen,
                   const std::string& subject, PromptKind kind, const std::string& subject_term,
                   const std::string& trigger, const PromptPools& pools, Rng& rng) {
    for (int attempt = 0; attempt < kDedupeAttempts; ++attempt) {
        PromptComponents c = sample_components(subject, pools, rng);
        std::string text = render_prompt(c);
        if (!seen.insert(text).second) continue;
        prompts.push_back(finish_prompt(std::move(c), kind, subject_term, trigger, pools));
        return;
    }
    throw ValidationError("prompt build: could not sample a fresh variant for subject '" +
                          subject + "' (pool capacity exhausted)");
}

void check_pool(const std::vector<std::string>& pool, const std::string& name,
                bool prefix_free) {
    if (pool.empty()) throw ValidationError("prompt pools: '" + name + "' pool is empty");
    std::set<std::string> seen;
    for (const auto& entry : pool) {
        if (entry.empty()) throw ValidationError("prompt pools: empty entry in '" + name + "'");
        if (!seen.insert(entry).second)
            throw ValidationError("prompt pools: duplicate entry in '" + name + "'");
    }
    // parse_prompt matches framing as a prefix and the rest as suffixes, so
    // no entry may shadow another within its pool
    for (const auto& a : pool) {
        for (const auto& b : pool) {
            if (a == b || a.size() >= b.size()) continue;
            const bool shadows = prefix_free ? b.compare(0, a.size(), a) == 0
                                             : b.compare(b.size() - a.size(), a.size(), a) == 0;
            if (shadows)
                throw ValidationError("prompt pools: '" + a + "' shadows '" + b + "' in '" +
                                      name + "'");
        }
    }
}

}  // namespace

std::string prompt_kind_name(PromptKind kind) {
    switch (kind) {
        case PromptKind::gen: return "gen";
        case PromptKind::eval_neutral: return "eval_neutral";
        case PromptKind::eval_trigger: return "eval_trigger";
        default: return "train";
    }
}

nlohmann::json Prompt::to_json() const {
    return {{"id", id},
            {"text", text},
            {"kind", prompt_kind_name(kind)},
            {"subject", subject_term},
            {"trigger", trigger},
            {"components",
             {{"framing", components.framing},
              {"subject", components.subject},
              {"style", components.style},
              {"lighting", components.lighting},
              {"background", components.background},
              {"expression", components.expression}}},
            {"negative_constraints", negative_constraints}};
}

void PromptPools::validate() const {
    check_pool(framing, "framing", true);
    check_pool(style, "style", false);
    check_pool(lighting, "lighting", false);
    check_pool(background, "background", false);
    check_pool(expression, "expression", false);
    for (const auto& f : framing) {
        if (f.size() < 4 || f.compare(f.size() - 4, 4, "of a") != 0)
            throw ValidationError("prompt pools: framing entry '" + f +
                                  "' must end with 'of a'");
    }
}

nlohmann::json PromptPools::to_json() const {
    return {{"framing", framing},
            {"style", style},
            {"lighting", lighting},
            {"background", background},
            {"expression", expression},
            {"negative_conflicts", negative_conflicts}};
}

PromptPools PromptPools::builtin() {
    PromptPools p;
    p.framing = {"a close-up photo of a", "a head and shoulders portrait of a",
                 "a clear headshot portrait of a", "a clear, front-facing portrait of a",
                 "a professional studio portrait of a"};
    p.style = {"photorealistic style", "cinematic style", "documentary portrait style",
               "ultra-detailed photo", "high-resolution photograph"};
    p.lighting = {"lit with soft, natural light", "lit with professional studio lighting",
                  "Rembrandt lighting", "dramatic rim lighting", "soft, diffused lighting"};
    p.background = {"against a plain studio background", "against a dark background",
                    "against a solid neutral-colored wall", "with a soft out-of-focus background",
                    "with a simple and clean background"};
    p.expression = {"with a neutral expression", "with a calm expression",
                    "with a gentle and relaxed expression", "with a slight smile",
                    "looking directly at the camera with a soft gaze"};
    p.negative_conflicts = {{"professional", {"casually dressed", "sloppy"}},
                            {"unprofessional", {"in business attire", "formal"}},
                            {"poor", {"wealthy", "an executive"}},
                            {"successful", {"impoverished", "needy"}}};
    p.validate();
    return p;
}

PromptPools PromptPools::from_json(const nlohmann::json& doc) {
    PromptPools p;
    try {
        p.framing = doc.at("framing").get<std::vector<std::string>>();
        p.style = doc.at("style").get<std::vector<std::string>>();
        p.lighting = doc.at("lighting").get<std::vector<std::string>>();
        p.background = doc.at("background").get<std::vector<std::string>>();
        p.expression = doc.at("expression").get<std::vector<std::string>>();
        if (doc.contains("negative_conflicts"))
            p.negative_conflicts =
                doc["negative_conflicts"].get<std::map<std::string, std::vector<std::string>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("prompt pools: malformed document: ") + e.what());
    }
    p.validate();
    return p;
}

PromptPools PromptPools::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("prompt pools: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("prompt pools: invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(doc);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char byte : text) {
        h ^= byte;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& text) {
    return hex64(fnv1a64(text));
}

std::string render_prompt(const PromptComponents& c) {
    return c.framing + " " + c.subject + ", " + c.style + ", " + c.lighting + ", " +
           c.background + ", " + c.expression + ".";
}

PromptComponents parse_prompt(const std::string& text, const PromptPools& pools) {
    pools.validate();
    PromptComponents out;

    std::string rest = text;
    for (const auto& f : pools.framing) {
        if (rest.size() > f.size() + 1 && rest.compare(0, f.size(), f) == 0 &&
            rest[f.size()] == ' ') {
            out.framing = f;
            rest = rest.substr(f.size() + 1);
            break;
        }
    }
    if (out.framing.empty()) throw ValidationError("parse_prompt: no framing prefix matches");
    if (rest.empty() || rest.back() != '.')
        throw ValidationError("parse_prompt: text does not end with '.'");
    rest.pop_back();

    auto take_suffix = [&rest](const std::vector<std::string>& pool, const std::string& name) {
        for (const auto& entry : pool) {
            const std::string tail = ", " + entry;
            if (rest.size() > tail.size() &&
                rest.compare(rest.size() - tail.size(), tail.size(), tail) == 0) {
                rest.resize(rest.size() - tail.size());
                return entry;
            }
        }
        throw ValidationError("parse_prompt: no " + name + " component matches");
    };
    out.expression = take_suffix(pools.expression, "expression");
    out.background = take_suffix(pools.background, "background");
    out.lighting = take_suffix(pools.lighting, "lighting");
    out.style = take_suffix(pools.style, "style");
    if (rest.empty()) throw ValidationError("parse_prompt: empty subject");
    out.subject = rest;
    return out;
}

PromptSet build_gen_set(std::uint64_t seed, const PromptPools& pools, const Taxonomy& taxonomy) {
    pools.validate();
    Rng rng(mix_seed(seed, 0xB001));
    PromptSet set;
    set.kind = "gen";
    set.seed = seed;
    std::set<std::string> seen;
    const auto& gender = taxonomy.attribute(AttributeId::gender).categories;
    const auto& age = taxonomy.attribute(AttributeId::age).categories;
    const auto& race = taxonomy.attribute(AttributeId::race).categories;
    for (int j = 0; j < kJointSize; ++j) {
        const DemographicTuple t = joint_decode(j);
        const std::string subject =
            race[static_cast<std::size_t>(t.race_cat)] + " " +
            age_display(age[static_cast<std::size_t>(t.age_cat)]) + " " +
            gender[static_cast<std::size_t>(t.gender_cat)];
        for (long long v = 0; v < kVariantsPerCombination; ++v)
            append_unique(set.prompts, seen, subject, PromptKind::gen, subject, "", pools, rng);
    }
    return set;
}

PromptSet build_eval_set(std::uint64_t seed, const PromptPools& pools, const Taxonomy& taxonomy) {
    pools.validate();
    Rng rng(mix_seed(seed, 0xE7A1));
    PromptSet set;
    set.kind = "eval";
    set.seed = seed;
    std::set<std::string> seen;
    for (long long i = 0; i < kNeutralEvalCount; ++i)
        append_unique(set.prompts, seen, "person", PromptKind::eval_neutral, "", "", pools, rng);
    for (const auto& trigger : taxonomy.triggers()) {
        std::vector<std::string> terms{trigger};
        const auto& info = taxonomy.trigger_info(trigger);
        terms.insert(terms.end(), info.paraphrases.begin(), info.paraphrases.end());
        for (long long i = 0; i < kPerTriggerCount; ++i) {
            const std::string& term = terms[rng.uniform_index(terms.size())];
            append_unique(set.prompts, seen, term + " person", PromptKind::eval_trigger, term,
                          trigger, pools, rng);
        }
    }
    return set;
}

PromptSet build_train_set(long long n, std::uint64_t seed,
                          const std::vector<std::string>& train_vocabulary,
                          const PromptPools& pools, const Taxonomy& taxonomy) {
    pools.validate();
    if (n < 1) throw ValidationError("train set: size must be at least 1");

    std::set<std::string> vocab(train_vocabulary.begin(), train_vocabulary.end());
    if (vocab.size() != train_vocabulary.size())
        throw ValidationError("train set: vocabulary contains duplicates");
    for (const auto& term : vocab)
        if (term.empty()) throw ValidationError("train set: empty vocabulary term");

    const auto eval_terms = taxonomy.eval_vocabulary();
    std::vector<std::string> leaked;
    for (const auto& term : eval_terms)
        if (vocab.count(term)) leaked.push_back(term);
    if (!leaked.empty()) {
        std::string msg = "train set: vocabulary overlaps the eval vocabulary:";
        for (const auto& term : leaked) msg += " '" + term + "'";
        throw ValidationError(msg);
    }

    const long long subjects = vocab.empty() ? 1 : static_cast<long long>(vocab.size());
    if (n > subjects * variants_per_subject(pools))
        throw ValidationError("train set: requested size exceeds the distinct-prompt capacity");

    Rng rng(mix_seed(seed, 0x7821));
    PromptSet set;
    set.kind = "train";
    set.seed = seed;
    std::set<std::string> seen;
    for (long long i = 0; i < n; ++i) {
        if (train_vocabulary.empty()) {
            append_unique(set.prompts, seen, "person", PromptKind::train, "", "", pools, rng);
        } else {
            const std::string& term =
                train_vocabulary[rng.uniform_index(train_vocabulary.size())];
            append_unique(set.prompts, seen, term + " person", PromptKind::train, term, "", pools,
                          rng);
        }
    }
    return set;
}

std::vector<DisjointnessViolation> check_disjoint(const PromptSet& a, const PromptSet& b) {
    std::vector<DisjointnessViolation> violations;
    std::set<std::string> texts;
    for (const auto& p : a.prompts) texts.insert(p.text);
    std::set<std::string> reported;
    for (const auto& p : b.prompts)
        if (texts.count(p.text) && reported.insert(p.text).second)
            violations.push_back({"text", p.text});

    if (a.kind != b.kind) {
        std::set<std::string> terms;
        for (const auto& p : a.prompts)
            if (!p.subject_term.empty()) terms.insert(p.subject_term);
        std::set<std::string> seen;
        for (const auto& p : b.prompts)
            if (!p.subject_term.empty() && terms.count(p.subject_term) &&
                seen.insert(p.subject_term).second)
                violations.push_back({"subject_term", p.subject_term});
    }
    return violations;
}

}  // namespace fairkit
