#include "fairkit/labels.hpp"

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairkit/errors.hpp"

namespace fairkit {

namespace {

LabelRecord make_record(const std::string& prompt_id, const std::string& image_id,
                        const std::string& attribute, const std::string& category,
                        double confidence, std::size_t line, const Taxonomy& taxonomy) {
    const Attribute* attr = taxonomy.find_attribute(attribute);
    if (!attr)
        throw ValidationError("labels line " + std::to_string(line) + ": unknown attribute '" +
                              attribute + "'");
    int cat = taxonomy.category_index(attr->id, category);
    if (cat < 0)
        throw ValidationError("labels line " + std::to_string(line) + ": unknown category '" +
                              category + "' for attribute '" + attribute + "'");
    if (!(confidence >= 0.0 && confidence <= 1.0))
        throw ValidationError("labels line " + std::to_string(line) +
                              ": confidence outside [0,1]");
    return LabelRecord{prompt_id, image_id, attr->id, cat, confidence};
}

void check_duplicates(const std::vector<LabelRecord>& records) {
    std::set<std::tuple<std::string, std::string, int>> seen;
    for (const auto& r : records) {
        auto key = std::make_tuple(r.prompt_id, r.image_id, static_cast<int>(r.attribute));
        if (!seen.insert(key).second)
            throw ValidationError("labels: duplicate record for (" + r.prompt_id + ", " +
                                  r.image_id + ", " +
                                  std::to_string(static_cast<int>(r.attribute)) + ")");
    }
}

}  // namespace

std::vector<LabelRecord> parse_labels(std::istream& source, const Taxonomy& taxonomy) {
    std::vector<LabelRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(source, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("labels line " + std::to_string(lineno) + ": invalid JSON: " +
                                  e.what());
        }
        try {
            records.push_back(make_record(rec.at("prompt_id").get<std::string>(),
                                          rec.at("image_id").get<std::string>(),
                                          rec.at("attribute").get<std::string>(),
                                          rec.at("category").get<std::string>(),
                                          rec.at("confidence").get<double>(), lineno, taxonomy));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("labels line " + std::to_string(lineno) +
                                  ": missing or mistyped field: " + e.what());
        }
    }
    check_duplicates(records);
    return records;
}

std::vector<LabelRecord> parse_labels_csv(std::istream& source, const Taxonomy& taxonomy) {
    std::vector<LabelRecord> records;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(source, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 5)
            throw ValidationError("labels csv line " + std::to_string(lineno) +
                                  ": expected 5 columns, got " + std::to_string(cols.size()));
        if (!header_seen) {
            header_seen = true;
            if (cols[0] == "prompt_id") continue;  // header row optional
        }
        double conf = 0.0;
        try {
            conf = std::stod(cols[4]);
        } catch (const std::exception&) {
            throw ValidationError("labels csv line " + std::to_string(lineno) +
                                  ": bad confidence '" + cols[4] + "'");
        }
        records.push_back(make_record(cols[0], cols[1], cols[2], cols[3], conf, lineno, taxonomy));
    }
    check_duplicates(records);
    return records;
}

CategoricalDistribution empirical_distribution(const std::vector<LabelRecord>& records,
                                               AttributeId attribute, double tau,
                                               const Taxonomy& taxonomy) {
    const auto& attr = taxonomy.attribute(attribute);
    std::vector<long long> counts(attr.categories.size(), 0);
    long long retained = 0;
    for (const auto& r : records) {
        if (r.attribute != attribute) continue;
        if (r.confidence < tau) continue;
        counts[r.category] += 1;
        ++retained;
    }
    if (retained == 0)
        throw ValidationError("empirical_distribution: all records abstained for attribute '" +
                              attr.name + "'");
    CategoricalDistribution dist;
    dist.attribute = attribute;
    dist.support_count = retained;
    dist.probs.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        dist.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(retained);
    return dist;
}

GroupCounts group_counts(const std::vector<LabelRecord>& records, const std::string& prompt_id,
                         long long n, double tau, const Taxonomy& taxonomy) {
    if (n < 1) throw ValidationError("group_counts: group size must be >= 1");
    std::set<std::string> images;
    for (const auto& r : records)
        if (r.prompt_id == prompt_id) images.insert(r.image_id);
    if (static_cast<long long>(images.size()) > n)
        throw ValidationError("group_counts: " + std::to_string(images.size()) +
                              " distinct images exceed group size " + std::to_string(n));

    GroupCounts gc;
    gc.prompt_id = prompt_id;
    gc.group_size = n;
    for (int a = 0; a < kAttributeCount; ++a) {
        const auto& attr = taxonomy.attribute(static_cast<AttributeId>(a));
        gc.per_attribute[a].assign(attr.categories.size(), 0);
        long long retained = 0;
        for (const auto& r : records) {
            if (r.prompt_id != prompt_id) continue;
            if (static_cast<int>(r.attribute) != a) continue;
            if (r.confidence < tau) continue;
            gc.per_attribute[a][r.category] += 1;
            ++retained;
        }
        gc.abstained[a] = n - retained;
    }
    return gc;
}

GroupCounts merge(const GroupCounts& a, const GroupCounts& b) {
    GroupCounts out = a;
    out.group_size = a.group_size + b.group_size;
    for (int i = 0; i < kAttributeCount; ++i) {
        for (std::size_t k = 0; k < out.per_attribute[i].size(); ++k)
            out.per_attribute[i][k] += b.per_attribute[i][k];
        out.abstained[i] += b.abstained[i];
    }
    return out;
}

}  // namespace fairkit
