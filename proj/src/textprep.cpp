#include "dexter/textprep.hpp"

#include <fstream>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

bool is_letter(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

// ---- Porter stemmer -------------------------------------------------------
//
// Straight implementation of the 1980 algorithm: measure-based conditions,
// longest-suffix-match within a step, a failed condition means the step
// changes nothing.

bool porter_is_consonant(const std::string& word, size_t i) {
    char c = word[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
    if (c == 'y') {
        return i == 0 || !porter_is_consonant(word, i - 1);
    }
    return true;
}

// m in [C](VC)^m[V]: the number of vowel-to-consonant transitions.
int porter_measure(const std::string& stem) {
    int m = 0;
    bool prev_vowel = false;
    for (size_t i = 0; i < stem.size(); ++i) {
        bool vowel = !porter_is_consonant(stem, i);
        if (prev_vowel && !vowel) ++m;
        prev_vowel = vowel;
    }
    return m;
}

bool porter_contains_vowel(const std::string& stem) {
    for (size_t i = 0; i < stem.size(); ++i) {
        if (!porter_is_consonant(stem, i)) return true;
    }
    return false;
}

bool porter_double_consonant(const std::string& stem) {
    size_t n = stem.size();
    return n >= 2 && stem[n - 1] == stem[n - 2] && porter_is_consonant(stem, n - 1);
}

// *o: ends consonant-vowel-consonant where the final consonant is not w, x
// or y.
bool porter_ends_cvc(const std::string& stem) {
    size_t n = stem.size();
    if (n < 3) return false;
    char last = stem[n - 1];
    return porter_is_consonant(stem, n - 3) && !porter_is_consonant(stem, n - 2) &&
           porter_is_consonant(stem, n - 1) && last != 'w' && last != 'x' && last != 'y';
}

bool ends_with(const std::string& word, const std::string& suffix) {
    return word.size() >= suffix.size() &&
           word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct SuffixRule {
    const char* suffix;
    const char* replacement;
};

// Longest matching suffix wins; fires only when measure(stem) clears
// min_measure. Returns true when a rule fired.
bool apply_measured_rules(std::string& word, const SuffixRule* rules, size_t count,
                          int min_measure) {
    const SuffixRule* best = nullptr;
    size_t best_len = 0;
    for (size_t i = 0; i < count; ++i) {
        std::string suffix = rules[i].suffix;
        if (ends_with(word, suffix) && suffix.size() > best_len) {
            best = &rules[i];
            best_len = suffix.size();
        }
    }
    if (!best) return false;
    std::string stem = word.substr(0, word.size() - best_len);
    if (porter_measure(stem) <= min_measure - 1) return false;
    word = stem + best->replacement;
    return true;
}

std::string step1a(std::string word) {
    if (ends_with(word, "sses")) return word.substr(0, word.size() - 4) + "ss";
    if (ends_with(word, "ies")) return word.substr(0, word.size() - 3) + "i";
    if (ends_with(word, "ss")) return word;
    if (ends_with(word, "s")) return word.substr(0, word.size() - 1);
    return word;
}

std::string step1b(std::string word) {
    if (ends_with(word, "eed")) {
        std::string stem = word.substr(0, word.size() - 3);
        if (porter_measure(stem) > 0) return stem + "ee";
        return word;
    }
    bool fired = false;
    if (ends_with(word, "ed") && porter_contains_vowel(word.substr(0, word.size() - 2))) {
        word = word.substr(0, word.size() - 2);
        fired = true;
    } else if (ends_with(word, "ing") && porter_contains_vowel(word.substr(0, word.size() - 3))) {
        word = word.substr(0, word.size() - 3);
        fired = true;
    }
    if (fired) {
        if (ends_with(word, "at") || ends_with(word, "bl") || ends_with(word, "iz")) {
            return word + "e";
        }
        if (porter_double_consonant(word)) {
            char last = word.back();
            if (last != 'l' && last != 's' && last != 'z') {
                return word.substr(0, word.size() - 1);
            }
            return word;
        }
        if (porter_measure(word) == 1 && porter_ends_cvc(word)) {
            return word + "e";
        }
    }
    return word;
}

std::string step1c(std::string word) {
    if (ends_with(word, "y") && porter_contains_vowel(word.substr(0, word.size() - 1))) {
        word.back() = 'i';
    }
    return word;
}

constexpr SuffixRule kStep2Rules[] = {
    {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
    {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
    {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
    {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
    {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
};

constexpr SuffixRule kStep3Rules[] = {
    {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
    {"ical", "ic"},  {"ful", ""},   {"ness", ""},
};

constexpr const char* kStep4Suffixes[] = {
    "al",  "ance", "ence", "er",    "ic",   "able", "ible", "ant", "ement", "ment",
    "ent", "ion",  "ou",   "ism",   "ate",  "iti",  "ous",  "ive", "ize",
};

std::string step4(std::string word) {
    const char* best = nullptr;
    size_t best_len = 0;
    for (const char* suffix : kStep4Suffixes) {
        std::string s = suffix;
        if (ends_with(word, s) && s.size() > best_len) {
            best = suffix;
            best_len = s.size();
        }
    }
    if (!best) return word;
    std::string stem = word.substr(0, word.size() - best_len);
    if (porter_measure(stem) <= 1) return word;
    if (std::string(best) == "ion" && !(ends_with(stem, "s") || ends_with(stem, "t"))) {
        return word;
    }
    return stem;
}

std::string step5a(std::string word) {
    if (ends_with(word, "e")) {
        std::string stem = word.substr(0, word.size() - 1);
        int m = porter_measure(stem);
        if (m > 1) return stem;
        if (m == 1 && !porter_ends_cvc(stem)) return stem;
    }
    return word;
}

std::string step5b(std::string word) {
    if (porter_measure(word) > 1 && porter_double_consonant(word) && word.back() == 'l') {
        return word.substr(0, word.size() - 1);
    }
    return word;
}

// ---------------------------------------------------------------------------

}  // namespace

StopwordList StopwordList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open stopword list " + path);
    }
    StopwordList list;
    std::string line;
    while (std::getline(in, line)) {
        std::string entry = trim(line);
        if (entry.empty()) continue;
        if (entry[0] == '#') {
            if (list.version.empty()) {
                list.version = trim(entry.substr(1));
            }
            continue;
        }
        list.words.insert(ascii_fold(entry));
    }
    return list;
}

std::string clean(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        bool keep = is_letter(c) || is_digit(c) || c == '\'' || c == '-';
        if (keep) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> tokens;
    for (const auto& piece : split_any(text, " ")) {
        tokens.push_back(ascii_fold(piece));
    }
    return tokens;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordList& list) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) {
        if (!list.contains(token)) out.push_back(token);
    }
    return out;
}

std::string porter_stem(const std::string& token) {
    if (token.size() <= 2) return token;
    for (char c : token) {
        if (c < 'a' || c > 'z') return token;
    }
    std::string word = token;
    word = step1a(std::move(word));
    word = step1b(std::move(word));
    word = step1c(std::move(word));
    std::string w2 = word;
    if (apply_measured_rules(w2, kStep2Rules, std::size(kStep2Rules), 1)) word = w2;
    std::string w3 = word;
    if (apply_measured_rules(w3, kStep3Rules, std::size(kStep3Rules), 1)) word = w3;
    word = step4(std::move(word));
    word = step5a(std::move(word));
    word = step5b(std::move(word));
    return word;
}

PreprocessedText preprocess(const std::string& apk_id, const std::string& description,
                            const StopwordList& list) {
    PreprocessedText out;
    out.apk_id = apk_id;
    auto tokens = remove_stopwords(tokenize_lower(clean(description)), list);
    out.tokens.reserve(tokens.size());
    for (const auto& token : tokens) {
        out.tokens.push_back(porter_stem(token));
    }
    if (out.tokens.empty()) {
        throw Error(ErrorKind::EmptyAfterPreprocessing, "no tokens survive for " + apk_id);
    }
    out.joined = join(out.tokens, " ");
    return out;
}

}  // namespace dexter
