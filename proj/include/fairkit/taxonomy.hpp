#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fairkit {

enum class AttributeId : int { gender = 0, age = 1, race = 2 };

constexpr int kAttributeCount = 3;
constexpr std::array<int, 3> kCategoryCounts{2, 3, 5};
constexpr int kJointSize = 2 * 3 * 5;

struct Attribute {
    AttributeId id;
    std::string name;
    std::vector<std::string> categories;  // ordering frozen
};

struct TriggerInfo {
    std::string dimension;  // Competence | Warmth
    std::string polarity;   // High | Low
    std::vector<std::string> paraphrases;
};

// Fixed attribute universe and trigger vocabulary. The category structure
// (2 genders, 3 age bands, 5 consolidated race groups) is frozen; loading a
// document with a different structure is rejected. Immutable after
// construction, safe for concurrent reads.
class Taxonomy {
  public:
    static Taxonomy builtin();
    static Taxonomy from_json(const nlohmann::json& doc);
    static Taxonomy load(const std::string& path);

    const std::vector<Attribute>& attributes() const { return attributes_; }
    const Attribute& attribute(AttributeId id) const {
        return attributes_[static_cast<int>(id)];
    }
    // nullptr when the name is unknown
    const Attribute* find_attribute(const std::string& name) const;
    // -1 when the category name is unknown for the attribute
    int category_index(AttributeId id, const std::string& category) const;

    const std::vector<std::string>& triggers() const { return triggers_; }
    bool is_trigger(const std::string& word) const;
    const TriggerInfo& trigger_info(const std::string& trigger) const;

    // all eval-side subject terms: triggers plus their paraphrases
    std::vector<std::string> eval_vocabulary() const;

    nlohmann::json to_json() const;

  private:
    std::vector<Attribute> attributes_;
    std::vector<std::string> triggers_;
    std::map<std::string, TriggerInfo> trigger_info_;
};

struct DemographicTuple {
    int gender_cat = 0;
    int age_cat = 0;
    int race_cat = 0;

    bool operator==(const DemographicTuple& o) const {
        return gender_cat == o.gender_cat && age_cat == o.age_cat && race_cat == o.race_cat;
    }
    int category(AttributeId id) const {
        switch (id) {
            case AttributeId::gender: return gender_cat;
            case AttributeId::age: return age_cat;
            default: return race_cat;
        }
    }
};

// row-major bijection over the 2x3x5 joint space
int joint_index(const DemographicTuple& t);
DemographicTuple joint_decode(int index);

// sums joint counts down to one attribute's category counts
std::vector<long long> marginalize(const std::vector<long long>& joint_counts, AttributeId id);

}  // namespace fairkit
