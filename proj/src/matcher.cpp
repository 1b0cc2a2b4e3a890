#include "dexter/matcher.hpp"

#include <algorithm>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<char32_t> sa = utf8_decode(a);
    std::vector<char32_t> sb = utf8_decode(b);
    if (sa.empty()) return sb.size();
    if (sb.empty()) return sa.size();

    // Single-row DP; prev[j] holds the distance for prefixes (i-1, j).
    std::vector<size_t> prev(sb.size() + 1);
    std::vector<size_t> cur(sb.size() + 1);
    for (size_t j = 0; j <= sb.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= sa.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= sb.size(); ++j) {
            size_t substitute = prev[j - 1] + (sa[i - 1] != sb[j - 1] ? 1 : 0);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitute});
        }
        std::swap(prev, cur);
    }
    return prev[sb.size()];
}

double similarity(const std::string& a, const std::string& b) {
    std::string fa = ascii_fold(a);
    std::string fb = ascii_fold(b);
    size_t la = utf8_decode(fa).size();
    size_t lb = utf8_decode(fb).size();
    if (la == 0 && lb == 0) {
        throw Error(ErrorKind::BothEmpty, "similarity of two empty strings");
    }
    size_t distance = levenshtein(fa, fb);
    return 1.0 - static_cast<double>(distance) / static_cast<double>(std::max(la, lb));
}

MatchResult match_feature(const std::string& query, FeatureCategory category,
                          const KnowledgeCorpus& corpus, const MatcherConfig& cfg) {
    MatchResult result;
    result.query = query;

    if (const CorpusEntry* exact = corpus.find(category, query)) {
        result.outcome = MatchOutcome::Exact;
        result.entry = exact;
        result.similarity = 1.0;
        return result;
    }

    const CorpusEntry* best = nullptr;
    double best_similarity = -1.0;
    for (const auto& entry : corpus.entries(category)) {
        double s = similarity(query, entry.name);
        if (s > best_similarity || (s == best_similarity && best && entry.name < best->name)) {
            best = &entry;
            best_similarity = s;
        }
    }

    if (best && best_similarity >= cfg.threshold) {
        result.outcome = MatchOutcome::Fuzzy;
        result.entry = best;
        result.similarity = best_similarity;
    }
    return result;
}

}  // namespace dexter
