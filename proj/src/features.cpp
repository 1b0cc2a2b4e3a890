#include "dexter/features.hpp"

#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dexter/apk.hpp"
#include "dexter/errors.hpp"
#include "dexter/sha256.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

using nlohmann::json;

bool is_space_char(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

// Appends to an ordered set: skips values already present.
void insert_unique(std::vector<std::string>& set, std::unordered_set<std::string>& seen,
                   std::string value) {
    if (seen.insert(value).second) {
        set.push_back(std::move(value));
    }
}

struct SetBuilder {
    std::vector<std::string>* target;
    std::unordered_set<std::string> seen;

    explicit SetBuilder(std::vector<std::string>& t) : target(&t) {}

    void add_raw(const std::string& raw) {
        insert_unique(*target, seen, normalize_feature(raw));
    }
};

void collect(const ManifestElement& element, SetBuilder& permissions, SetBuilder& services,
             SetBuilder& receivers, SetBuilder& intent_actions, bool inside_component_filter) {
    const ManifestAttribute* name_attr = element.find_attribute("name");

    if (element.name == "uses-permission" && name_attr) {
        permissions.add_raw(name_attr->value);
    } else if (element.name == "service" && name_attr) {
        services.add_raw(name_attr->value);
    } else if (element.name == "receiver" && name_attr) {
        receivers.add_raw(name_attr->value);
    } else if (element.name == "action" && name_attr && inside_component_filter) {
        intent_actions.add_raw(name_attr->value);
    }

    // The flag turns on only for intent-filters directly under a receiver or
    // service, so actions under activity filters never qualify.
    bool is_component = element.name == "service" || element.name == "receiver";
    for (const auto& child : element.children) {
        bool child_in_filter =
            inside_component_filter || (is_component && child.name == "intent-filter");
        collect(child, permissions, services, receivers, intent_actions, child_in_filter);
    }
}

}  // namespace

const char* category_name(FeatureCategory category) {
    switch (category) {
        case FeatureCategory::Permission: return "permission";
        case FeatureCategory::Service: return "service";
        case FeatureCategory::Receiver: return "receiver";
        case FeatureCategory::IntentAction: return "intent_action";
    }
    return "unknown";
}

const std::vector<std::string>& StaticFeatureSet::category(FeatureCategory c) const {
    switch (c) {
        case FeatureCategory::Permission: return permissions;
        case FeatureCategory::Service: return services;
        case FeatureCategory::Receiver: return receivers;
        case FeatureCategory::IntentAction: return intent_actions;
    }
    return permissions;
}

std::vector<std::string>& StaticFeatureSet::category(FeatureCategory c) {
    return const_cast<std::vector<std::string>&>(
        static_cast<const StaticFeatureSet*>(this)->category(c));
}

size_t StaticFeatureSet::total() const {
    return permissions.size() + services.size() + receivers.size() + intent_actions.size();
}

std::string normalize_feature(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (!is_space_char(c)) out.push_back(c);
    }
    // One layer of matching surrounding quotes.
    if (out.size() >= 2) {
        char first = out.front();
        char last = out.back();
        if ((first == '"' && last == '"') || (first == '\'' && last == '\'')) {
            out = out.substr(1, out.size() - 2);
        }
    }
    if (out.empty()) {
        throw Error(ErrorKind::EmptyAfterNormalization, "feature name is empty after cleanup");
    }
    return out;
}

StaticFeatureSet extract_features(const ManifestDocument& manifest, const std::string& apk_id) {
    StaticFeatureSet features;
    features.apk_id = apk_id;
    SetBuilder permissions(features.permissions);
    SetBuilder services(features.services);
    SetBuilder receivers(features.receivers);
    SetBuilder intent_actions(features.intent_actions);
    for (const auto& root : manifest.roots) {
        collect(root, permissions, services, receivers, intent_actions, false);
    }
    return features;
}

StaticFeatureSet extract_from_apk(const std::string& apk_path) {
    std::string apk_id = sha256_file_hex(apk_path);
    std::vector<uint8_t> manifest_bytes = read_manifest_bytes(apk_path);
    ManifestDocument doc = parse_axml(manifest_bytes);
    return extract_features(doc, apk_id);
}

std::vector<StaticFeatureSet> load_features_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path);
    }
    std::vector<StaticFeatureSet> out;
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw Error(ErrorKind::MalformedRecord,
                        "line " + std::to_string(line_number) + ": not a JSON object");
        }
        if (!record.contains("apk_id") || !record["apk_id"].is_string() ||
            record["apk_id"].get<std::string>().empty()) {
            throw Error(ErrorKind::MalformedRecord,
                        "line " + std::to_string(line_number) + ": missing apk_id");
        }
        StaticFeatureSet features;
        features.apk_id = record["apk_id"].get<std::string>();

        auto read_category = [&](const char* key, std::vector<std::string>& target) {
            if (!record.contains(key)) return;
            if (!record[key].is_array()) {
                throw Error(ErrorKind::MalformedRecord,
                            "line " + std::to_string(line_number) + ": " + key + " is not an array");
            }
            std::unordered_set<std::string> seen;
            for (const auto& item : record[key]) {
                if (!item.is_string()) {
                    throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_number) +
                                                                ": " + key + " has a non-string");
                }
                insert_unique(target, seen, normalize_feature(item.get<std::string>()));
            }
        };
        read_category("permissions", features.permissions);
        read_category("services", features.services);
        read_category("receivers", features.receivers);
        read_category("intent_actions", features.intent_actions);
        out.push_back(std::move(features));
    }
    return out;
}

std::string feature_set_to_json(const StaticFeatureSet& features) {
    json record;
    record["apk_id"] = features.apk_id;
    record["permissions"] = features.permissions;
    record["services"] = features.services;
    record["receivers"] = features.receivers;
    record["intent_actions"] = features.intent_actions;
    return record.dump();
}

void write_features_json(const std::vector<StaticFeatureSet>& sets, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path);
    }
    for (const auto& features : sets) {
        out << feature_set_to_json(features) << "\n";
    }
    if (!out) {
        throw Error(ErrorKind::IoError, "write failed for " + path);
    }
}

}  // namespace dexter
