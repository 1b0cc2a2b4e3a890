#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace dexter {

// Pinned stopword list loaded from a data file: one lowercase word per
// line, '#' lines are metadata (the first carries the version tag).
struct StopwordList {
    std::unordered_set<std::string> words;
    std::string version;

    static StopwordList load(const std::string& path);
    bool contains(const std::string& token) const { return words.count(token) > 0; }
};

struct PreprocessedText {
    std::string apk_id;
    std::vector<std::string> tokens;
    std::string joined;
};

// Replaces everything outside [letters, digits, space, apostrophe, hyphen]
// with a space, collapses whitespace runs, trims the ends.
std::string clean(const std::string& text);

// Splits cleaned text on spaces and lowercases each token.
std::vector<std::string> tokenize_lower(const std::string& text);

// Order-preserving stopword filter; tokens must already be lowercase.
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordList& list);

// Classic Porter stemmer, steps 1a through 5b. Tokens that contain
// anything but ASCII letters pass through unchanged, as do tokens of one
// or two characters.
std::string porter_stem(const std::string& token);

// clean -> tokenize_lower -> remove_stopwords -> porter_stem. Throws
// Error(EmptyAfterPreprocessing) when no token survives.
PreprocessedText preprocess(const std::string& apk_id, const std::string& description,
                            const StopwordList& list);

}  // namespace dexter
