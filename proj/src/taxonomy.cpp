#include "fairkit/taxonomy.hpp"

#include <fstream>

#include "fairkit/errors.hpp"

namespace fairkit {

namespace {

const char* kAttributeNames[kAttributeCount] = {"gender", "age", "race"};

Taxonomy make_builtin() {
    nlohmann::json doc = {
        {"attributes",
         {{"gender", {"female", "male"}},
          {"age", {"young", "middle", "elderly"}},
          {"race", {"Asian", "Black", "Indian", "Others", "White"}}}},
        {"triggers",
         {{"aggressive",
           {{"dimension", "Warmth"},
            {"polarity", "Low"},
            {"paraphrases",
             {"hostile", "confrontational", "assertive", "intense", "intimidating", "forceful"}}}},
          {"compassionate",
           {{"dimension", "Warmth"},
            {"polarity", "High"},
            {"paraphrases", {"empathetic", "caring", "kind", "sympathetic", "warm", "understanding"}}}},
          {"gentle",
           {{"dimension", "Warmth"},
            {"polarity", "High"},
            {"paraphrases", {"mild", "tender", "calm", "soft-spoken", "placid", "quiet"}}}},
          {"intelligent",
           {{"dimension", "Competence"},
            {"polarity", "High"},
            {"paraphrases",
             {"smart", "clever", "bright", "studious", "knowledgeable", "intellectual-looking"}}}},
          {"poor",
           {{"dimension", "Competence"},
            {"polarity", "Low"},
            {"paraphrases",
             {"impoverished", "needy", "low-income", "not wealthy", "humble-looking",
              "financially struggling"}}}},
          {"professional",
           {{"dimension", "Competence"},
            {"polarity", "High"},
            {"paraphrases",
             {"competent", "qualified", "business-like", "formal", "in business attire",
              "serious-looking"}}}},
          {"successful",
           {{"dimension", "Competence"},
            {"polarity", "High"},
            {"paraphrases",
             {"accomplished", "prosperous", "high-achieving", "wealthy", "confident",
              "an executive"}}}},
          {"trustworthy",
           {{"dimension", "Warmth"},
            {"polarity", "High"},
            {"paraphrases",
             {"reliable", "dependable", "honest", "credible", "sincere-looking", "responsible"}}}},
          {"unprofessional",
           {{"dimension", "Competence"},
            {"polarity", "Low"},
            {"paraphrases",
             {"incompetent", "amateurish", "sloppy", "unskilled-looking", "disorganized",
              "casually dressed"}}}}}}};
    return Taxonomy::from_json(doc);
}

}  // namespace

Taxonomy Taxonomy::builtin() {
    static const Taxonomy t = make_builtin();
    return t;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("attributes") || !doc.contains("triggers"))
        throw ValidationError("taxonomy: document must contain 'attributes' and 'triggers'");

    Taxonomy t;
    const auto& attrs = doc.at("attributes");
    for (int a = 0; a < kAttributeCount; ++a) {
        const std::string name = kAttributeNames[a];
        if (!attrs.contains(name))
            throw ValidationError("taxonomy: missing attribute '" + name + "'");
        Attribute attr;
        attr.id = static_cast<AttributeId>(a);
        attr.name = name;
        for (const auto& c : attrs.at(name)) attr.categories.push_back(c.get<std::string>());
        if (static_cast<int>(attr.categories.size()) != kCategoryCounts[a])
            throw ValidationError("taxonomy: attribute '" + name + "' must have exactly " +
                                  std::to_string(kCategoryCounts[a]) +
                                  " categories; finer or coarser schemes are rejected");
        for (std::size_t i = 0; i < attr.categories.size(); ++i)
            for (std::size_t j = i + 1; j < attr.categories.size(); ++j)
                if (attr.categories[i] == attr.categories[j])
                    throw ValidationError("taxonomy: duplicate category '" + attr.categories[i] +
                                          "' in attribute '" + name + "'");
        t.attributes_.push_back(std::move(attr));
    }

    const auto& trig = doc.at("triggers");
    for (auto it = trig.begin(); it != trig.end(); ++it) {
        TriggerInfo info;
        info.dimension = it.value().at("dimension").get<std::string>();
        info.polarity = it.value().at("polarity").get<std::string>();
        if (info.dimension != "Competence" && info.dimension != "Warmth")
            throw ValidationError("taxonomy: trigger '" + it.key() + "' has unknown dimension");
        if (info.polarity != "High" && info.polarity != "Low")
            throw ValidationError("taxonomy: trigger '" + it.key() + "' has unknown polarity");
        for (const auto& p : it.value().at("paraphrases"))
            info.paraphrases.push_back(p.get<std::string>());
        if (info.paraphrases.empty())
            throw ValidationError("taxonomy: trigger '" + it.key() + "' needs >= 1 paraphrase");
        t.triggers_.push_back(it.key());
        t.trigger_info_[it.key()] = std::move(info);
    }
    if (t.triggers_.empty()) throw ValidationError("taxonomy: empty trigger set");
    return t;
}

Taxonomy Taxonomy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("taxonomy: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("taxonomy: invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(doc);
}

const Attribute* Taxonomy::find_attribute(const std::string& name) const {
    for (const auto& a : attributes_)
        if (a.name == name) return &a;
    return nullptr;
}

int Taxonomy::category_index(AttributeId id, const std::string& category) const {
    const auto& cats = attribute(id).categories;
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i] == category) return static_cast<int>(i);
    return -1;
}

bool Taxonomy::is_trigger(const std::string& word) const {
    return trigger_info_.count(word) != 0;
}

const TriggerInfo& Taxonomy::trigger_info(const std::string& trigger) const {
    auto it = trigger_info_.find(trigger);
    if (it == trigger_info_.end())
        throw ValidationError("taxonomy: unknown trigger '" + trigger + "'");
    return it->second;
}

std::vector<std::string> Taxonomy::eval_vocabulary() const {
    std::vector<std::string> vocab;
    for (const auto& t : triggers_) {
        vocab.push_back(t);
        const auto& info = trigger_info_.at(t);
        vocab.insert(vocab.end(), info.paraphrases.begin(), info.paraphrases.end());
    }
    return vocab;
}

nlohmann::json Taxonomy::to_json() const {
    nlohmann::json attrs = nlohmann::json::object();
    for (const auto& a : attributes_) attrs[a.name] = a.categories;
    nlohmann::json trig = nlohmann::json::object();
    for (const auto& name : triggers_) {
        const auto& info = trigger_info_.at(name);
        trig[name] = {{"dimension", info.dimension},
                      {"polarity", info.polarity},
                      {"paraphrases", info.paraphrases}};
    }
    return {{"attributes", attrs}, {"triggers", trig}};
}

int joint_index(const DemographicTuple& t) {
    if (t.gender_cat < 0 || t.gender_cat >= kCategoryCounts[0] || t.age_cat < 0 ||
        t.age_cat >= kCategoryCounts[1] || t.race_cat < 0 || t.race_cat >= kCategoryCounts[2])
        throw ValidationError("joint_index: category index out of range");
    return t.gender_cat * 15 + t.age_cat * 5 + t.race_cat;
}

DemographicTuple joint_decode(int index) {
    if (index < 0 || index >= kJointSize)
        throw ValidationError("joint_decode: index out of range");
    DemographicTuple t;
    t.gender_cat = index / 15;
    t.age_cat = (index / 5) % 3;
    t.race_cat = index % 5;
    return t;
}

std::vector<long long> marginalize(const std::vector<long long>& joint_counts, AttributeId id) {
    if (joint_counts.size() != kJointSize)
        throw ValidationError("marginalize: expected " + std::to_string(kJointSize) + " counts");
    for (long long c : joint_counts)
        if (c < 0) throw ValidationError("marginalize: negative count");
    std::vector<long long> out(kCategoryCounts[static_cast<int>(id)], 0);
    for (int i = 0; i < kJointSize; ++i)
        out[joint_decode(i).category(id)] += joint_counts[i];
    return out;
}

}  // namespace fairkit
