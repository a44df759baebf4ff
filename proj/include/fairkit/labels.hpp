#pragma once

#include <array>
#include <istream>
#include <string>
#include <vector>

#include "fairkit/taxonomy.hpp"

namespace fairkit {

// One classifier prediction for one image and one attribute.
struct LabelRecord {
    std::string prompt_id;
    std::string image_id;
    AttributeId attribute;
    int category;       // index into the attribute's category list
    double confidence;  // in [0, 1]
};

struct CategoricalDistribution {
    AttributeId attribute;
    std::vector<double> probs;
    long long support_count = 0;  // non-abstained records behind the estimate
};

// Per-prompt group counts N_k per attribute. Images lacking a usable record
// for an attribute are counted as abstained, so counts + abstained = N.
struct GroupCounts {
    std::string prompt_id;
    long long group_size = 0;
    std::array<std::vector<long long>, kAttributeCount> per_attribute;
    std::array<long long, kAttributeCount> abstained{0, 0, 0};
};

// Parses the JSONL record stream:
//   {"prompt_id": str, "image_id": str, "attribute": "gender|age|race",
//    "category": str, "confidence": float}
// Malformed lines are reported with their 1-based line number.
std::vector<LabelRecord> parse_labels(std::istream& source, const Taxonomy& taxonomy);

// CSV shim: header "prompt_id,image_id,attribute,category,confidence",
// no quoting support (ids must not contain commas).
std::vector<LabelRecord> parse_labels_csv(std::istream& source, const Taxonomy& taxonomy);

// Empirical category distribution for one prompt group and one attribute.
// Records with confidence < tau abstain. Throws when everything abstained.
CategoricalDistribution empirical_distribution(const std::vector<LabelRecord>& records,
                                               AttributeId attribute, double tau,
                                               const Taxonomy& taxonomy);

// Per-attribute counts for a group of N images identified by prompt_id.
GroupCounts group_counts(const std::vector<LabelRecord>& records, const std::string& prompt_id,
                         long long n, double tau, const Taxonomy& taxonomy);

// GroupCounts compose by addition; callers may shard by prompt and merge.
GroupCounts merge(const GroupCounts& a, const GroupCounts& b);

}  // namespace fairkit
