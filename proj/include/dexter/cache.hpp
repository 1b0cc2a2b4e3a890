#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "dexter/features.hpp"

namespace dexter {

enum class DescriptionSource { Corpus, Cache, Llm };

const char* source_name(DescriptionSource source);

struct CacheEntry {
    FeatureCategory category;
    std::string name;  // canonical case preserved
    std::string description;
    DescriptionSource source = DescriptionSource::Corpus;  // Corpus or Llm
    int64_t created_at = 0;                                // UTC seconds
};

struct CacheStats {
    uint64_t hits = 0;
    uint64_t misses = 0;
    uint64_t inserts = 0;
};

// Persistent description cache: in-memory map over an append-only JSON
// Lines log. Keyed by (category, case-folded name); the stored name keeps
// its original case. Single writer, many readers.
class DescriptionCache {
public:
    // In-memory only; nothing is persisted.
    DescriptionCache() = default;

    // Replays `path` if it exists (later lines win; corrupt lines are
    // skipped with a warning to stderr) and appends all future puts to it.
    explicit DescriptionCache(const std::string& path);

    std::optional<CacheEntry> get(FeatureCategory category, const std::string& name);

    // Last-write-wins upsert, durably appended. Throws
    // Error(PersistenceError) when the log cannot be written and
    // Error(EmptyDescription) for an empty description.
    void put(const CacheEntry& entry);

    CacheStats stats() const;
    size_t size() const;

    // Lines skipped during load.
    size_t corrupt_lines() const { return corrupt_lines_; }

private:
    static std::string key_of(FeatureCategory category, const std::string& name);

    mutable std::mutex mutex_;
    std::unordered_map<std::string, CacheEntry> entries_;
    std::string log_path_;  // empty = no persistence
    CacheStats stats_;
    size_t corrupt_lines_ = 0;
};

}  // namespace dexter
