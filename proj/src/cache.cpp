#include "dexter/cache.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

using nlohmann::json;

std::optional<FeatureCategory> category_from_name(const std::string& name) {
    if (name == "permission") return FeatureCategory::Permission;
    if (name == "service") return FeatureCategory::Service;
    if (name == "receiver") return FeatureCategory::Receiver;
    if (name == "intent_action") return FeatureCategory::IntentAction;
    return std::nullopt;
}

std::optional<DescriptionSource> source_from_name(const std::string& name) {
    if (name == "corpus") return DescriptionSource::Corpus;
    if (name == "cache") return DescriptionSource::Cache;
    if (name == "llm") return DescriptionSource::Llm;
    return std::nullopt;
}

std::string entry_to_line(const CacheEntry& entry) {
    json record;
    record["category"] = category_name(entry.category);
    record["name"] = entry.name;
    record["description"] = entry.description;
    record["source"] = source_name(entry.source);
    record["created_at"] = entry.created_at;
    return record.dump();
}

std::optional<CacheEntry> entry_from_line(const std::string& line) {
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) return std::nullopt;
    if (!record.contains("category") || !record.contains("name") ||
        !record.contains("description") || !record.contains("source")) {
        return std::nullopt;
    }
    if (!record["category"].is_string() || !record["name"].is_string() ||
        !record["description"].is_string() || !record["source"].is_string()) {
        return std::nullopt;
    }
    auto category = category_from_name(record["category"].get<std::string>());
    auto source = source_from_name(record["source"].get<std::string>());
    if (!category || !source) return std::nullopt;

    CacheEntry entry;
    entry.category = *category;
    entry.name = record["name"].get<std::string>();
    entry.description = record["description"].get<std::string>();
    entry.source = *source;
    if (record.contains("created_at") && record["created_at"].is_number_integer()) {
        entry.created_at = record["created_at"].get<int64_t>();
    }
    if (entry.name.empty() || entry.description.empty()) return std::nullopt;
    return entry;
}

}  // namespace

const char* source_name(DescriptionSource source) {
    switch (source) {
        case DescriptionSource::Corpus: return "corpus";
        case DescriptionSource::Cache: return "cache";
        case DescriptionSource::Llm: return "llm";
    }
    return "unknown";
}

std::string DescriptionCache::key_of(FeatureCategory category, const std::string& name) {
    return std::string(category_name(category)) + "\x1F" + ascii_fold(name);
}

DescriptionCache::DescriptionCache(const std::string& path) : log_path_(path) {
    if (!std::filesystem::exists(path)) {
        return;
    }
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::PersistenceError, "cannot open cache log " + path);
    }
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        auto entry = entry_from_line(line);
        if (!entry) {
            ++corrupt_lines_;
            std::cerr << "warning: cache log " << path << " line " << line_number
                      << " is corrupt, skipping\n";
            continue;
        }
        entries_[key_of(entry->category, entry->name)] = std::move(*entry);
    }
}

std::optional<CacheEntry> DescriptionCache::get(FeatureCategory category,
                                                const std::string& name) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key_of(category, name));
    if (it == entries_.end()) {
        ++stats_.misses;
        return std::nullopt;
    }
    ++stats_.hits;
    return it->second;
}

void DescriptionCache::put(const CacheEntry& entry) {
    if (entry.description.empty()) {
        throw Error(ErrorKind::EmptyDescription, "cache entry for '" + entry.name + "'");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    if (!log_path_.empty()) {
        std::ofstream out(log_path_, std::ios::app);
        if (!out) {
            throw Error(ErrorKind::PersistenceError, "cannot append to cache log " + log_path_);
        }
        out << entry_to_line(entry) << "\n";
        out.flush();
        if (!out) {
            throw Error(ErrorKind::PersistenceError, "write failed for cache log " + log_path_);
        }
    }
    entries_[key_of(entry.category, entry.name)] = entry;
    ++stats_.inserts;
}

CacheStats DescriptionCache::stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

size_t DescriptionCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

}  // namespace dexter
