#pragma once

#include <string>
#include <vector>

#include "dexter/axml.hpp"

namespace dexter {

enum class FeatureCategory { Permission, Service, Receiver, IntentAction };

const char* category_name(FeatureCategory category);

// The four static feature sets pulled from one app. Each vector behaves as
// an ordered set: first-occurrence order, no duplicates, no empty strings.
struct StaticFeatureSet {
    std::string apk_id;
    std::vector<std::string> permissions;
    std::vector<std::string> services;
    std::vector<std::string> receivers;
    std::vector<std::string> intent_actions;

    const std::vector<std::string>& category(FeatureCategory c) const;
    std::vector<std::string>& category(FeatureCategory c);
    size_t total() const;
};

// Canonical form of a raw feature name: outer whitespace stripped, internal
// whitespace removed (identifiers contain no spaces), one layer of
// surrounding quotes dropped. Letter case is preserved. Throws
// Error(EmptyAfterNormalization) when nothing remains.
std::string normalize_feature(const std::string& raw);

// Walks a parsed manifest and collects the four feature categories.
// Intent actions are taken only from intent-filters nested under receiver
// or service elements.
StaticFeatureSet extract_features(const ManifestDocument& manifest, const std::string& apk_id);

// Extracts straight from an APK file; apk_id is the file's SHA-256.
StaticFeatureSet extract_from_apk(const std::string& apk_path);

// JSON Lines ingestion: each line carries `apk_id` plus any of the four
// arrays. Values are normalized and deduplicated. Throws
// Error(MalformedRecord) with the offending line number.
std::vector<StaticFeatureSet> load_features_json(const std::string& path);

// One StaticFeatureSet per line with keys apk_id, permissions, services,
// receivers, intent_actions.
std::string feature_set_to_json(const StaticFeatureSet& features);
void write_features_json(const std::vector<StaticFeatureSet>& sets, const std::string& path);

}  // namespace dexter
