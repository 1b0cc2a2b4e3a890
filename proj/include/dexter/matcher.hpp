#pragma once

#include <string>

#include "dexter/corpus.hpp"

namespace dexter {

struct MatcherConfig {
    double threshold = 0.65;
};

enum class MatchOutcome { Exact, Fuzzy, Miss };

struct MatchResult {
    std::string query;
    MatchOutcome outcome = MatchOutcome::Miss;
    const CorpusEntry* entry = nullptr;  // set for Exact and Fuzzy
    double similarity = 0.0;             // set for Fuzzy
};

// Classic edit distance (insert/delete/substitute, unit costs) over Unicode
// scalar values.
size_t levenshtein(const std::string& a, const std::string& b);

// 1 - levenshtein(fold(a), fold(b)) / max(len(fold(a)), len(fold(b))).
// Throws Error(BothEmpty) when both strings are empty.
double similarity(const std::string& a, const std::string& b);

// Exact lookup first, then the most similar entry in the query's category;
// Fuzzy only when similarity clears the threshold. Ties on similarity go to
// the lexicographically smallest entry name.
MatchResult match_feature(const std::string& query, FeatureCategory category,
                          const KnowledgeCorpus& corpus, const MatcherConfig& cfg);

}  // namespace dexter
