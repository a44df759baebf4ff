#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairkit/taxonomy.hpp"

namespace fairkit {

enum class PromptKind { gen, eval_neutral, eval_trigger, train };

std::string prompt_kind_name(PromptKind kind);

struct PromptComponents {
    std::string framing;  // prefix ending in "of a"
    std::string subject;
    std::string style;
    std::string lighting;
    std::string background;
    std::string expression;
};

struct Prompt {
    std::string id;  // FNV-1a 64 of the text, hex
    std::string text;
    PromptKind kind = PromptKind::gen;
    std::string subject_term;  // demographic phrase, trigger term, or empty for neutral
    std::string trigger;       // owning trigger head word, empty when none
    PromptComponents components;
    std::vector<std::string> negative_constraints;

    nlohmann::json to_json() const;
};

struct PromptPools {
    std::vector<std::string> framing;
    std::vector<std::string> style;
    std::vector<std::string> lighting;
    std::vector<std::string> background;
    std::vector<std::string> expression;
    // trigger -> terms to suppress in the negative prompt
    std::map<std::string, std::vector<std::string>> negative_conflicts;

    void validate() const;
    nlohmann::json to_json() const;

    static PromptPools builtin();
    static PromptPools from_json(const nlohmann::json& doc);
    static PromptPools load(const std::string& path);
};

struct PromptSet {
    std::string kind;  // gen | eval | train
    std::uint64_t seed = 0;
    std::vector<Prompt> prompts;
};

std::uint64_t fnv1a64(const std::string& text);
std::string fnv1a64_hex(const std::string& text);

// text = framing + " " + subject + ", " + style + ", " + lighting + ", " +
//        background + ", " + expression + "."
std::string render_prompt(const PromptComponents& components);

// Inverse of render_prompt against the given pools: the framing is matched
// as a prefix and the trailing components as suffixes (pool entries may
// contain commas, so the grammar cannot be split naively).
PromptComponents parse_prompt(const std::string& text, const PromptPools& pools);

// 30 demographic combinations x 10 sampled component variants.
PromptSet build_gen_set(std::uint64_t seed, const PromptPools& pools, const Taxonomy& taxonomy);

// 300 neutral prompts plus 50 per trigger, the trigger term drawn uniformly
// from the head word and its paraphrases.
PromptSet build_eval_set(std::uint64_t seed, const PromptPools& pools, const Taxonomy& taxonomy);

// n prompts over a user-supplied subject vocabulary (validated disjoint from
// the eval vocabulary); an empty vocabulary builds neutral-only prompts.
PromptSet build_train_set(long long n, std::uint64_t seed,
                          const std::vector<std::string>& train_vocabulary,
                          const PromptPools& pools, const Taxonomy& taxonomy);

struct DisjointnessViolation {
    std::string kind;  // text | subject_term
    std::string value;
};

// Exact-text overlap is always reported; subject-term overlap only across
// sets of different kinds (within one kind shared terms are by design).
std::vector<DisjointnessViolation> check_disjoint(const PromptSet& a, const PromptSet& b);

}  // namespace fairkit
