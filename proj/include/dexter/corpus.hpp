#pragma once

#include <array>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dexter/features.hpp"

namespace dexter {

struct CorpusEntry {
    FeatureCategory category;
    std::string name;
    std::string description;
};

// Knowledge base mapping canonical feature names to prose descriptions,
// one table per feature category. Immutable after load.
class KnowledgeCorpus {
public:
    void add(CorpusEntry entry);  // throws Error(DuplicateEntry)

    const std::vector<CorpusEntry>& entries(FeatureCategory category) const;

    // Case-insensitive exact lookup; nullptr on miss.
    const CorpusEntry* find(FeatureCategory category, const std::string& name) const;

    size_t total() const;

private:
    static constexpr size_t index_of(FeatureCategory c) { return static_cast<size_t>(c); }

    std::array<std::vector<CorpusEntry>, 4> entries_;
    std::array<std::unordered_map<std::string, size_t>, 4> lookup_;
};

// Parses RFC-4180 CSV: quoted fields, doubled quotes, embedded newlines.
// Returns rows of fields; empty trailing line ignored.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Loads the four category tables (permissions.csv, services.csv,
// receivers.csv, intent_actions.csv), each with header `name,description`.
// Throws MissingCategoryFile, DuplicateEntry, or EmptyDescription.
KnowledgeCorpus load_corpus(const std::string& dir);

std::map<FeatureCategory, size_t> corpus_stats(const KnowledgeCorpus& corpus);

}  // namespace dexter
