#include "dexter/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

// Stable ordering shared by every ranked list: descending score, then
// ascending doc_id.
void sort_ranked(std::vector<RankedItem>& items) {
    std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

}  // namespace

std::vector<std::string> retrieval_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : ascii_fold(text)) {
        if (is_ascii_alnum(c)) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

SparseIndex SparseIndex::build(const std::vector<std::pair<std::string, std::string>>& docs,
                               double k1, double b) {
    SparseIndex index;
    index.k1_ = k1;
    index.b_ = b;
    size_t total_length = 0;
    for (const auto& [doc_id, text] : docs) {
        if (!index.id_to_index_.emplace(doc_id, index.doc_ids_.size()).second) {
            throw Error(ErrorKind::DuplicateDocId, doc_id);
        }
        index.doc_ids_.push_back(doc_id);
        std::unordered_map<std::string, size_t> counts;
        for (const auto& token : retrieval_tokenize(text)) {
            ++counts[token];
        }
        for (const auto& [term, count] : counts) {
            (void)count;
            ++index.doc_frequency_[term];
        }
        size_t length = 0;
        for (const auto& [term, count] : counts) {
            (void)term;
            length += count;
        }
        total_length += length;
        index.doc_lengths_.push_back(length);
        index.term_counts_.push_back(std::move(counts));
    }
    index.avgdl_ = index.doc_ids_.empty()
                       ? 0.0
                       : static_cast<double>(total_length) / static_cast<double>(index.doc_ids_.size());
    return index;
}

size_t SparseIndex::doc_frequency(const std::string& term) const {
    auto it = doc_frequency_.find(term);
    return it == doc_frequency_.end() ? 0 : it->second;
}

double SparseIndex::score(const std::string& query, const std::string& doc_id) const {
    auto it = id_to_index_.find(doc_id);
    if (it == id_to_index_.end()) {
        throw Error(ErrorKind::UnknownDocId, doc_id);
    }
    size_t doc = it->second;
    const auto& counts = term_counts_[doc];
    double doc_len = static_cast<double>(doc_lengths_[doc]);
    double n = static_cast<double>(doc_ids_.size());

    double total = 0.0;
    for (const auto& term : retrieval_tokenize(query)) {
        auto tf_it = counts.find(term);
        if (tf_it == counts.end()) continue;
        double tf = static_cast<double>(tf_it->second);
        double df = static_cast<double>(doc_frequency(term));
        double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        double denom = tf + k1_ * (1.0 - b_ + b_ * doc_len / avgdl_);
        total += idf * tf * (k1_ + 1.0) / denom;
    }
    return total;
}

RankedList SparseIndex::search(const std::string& query, size_t top_n) const {
    RankedList list;
    list.ranker = "sparse";
    list.items.reserve(doc_ids_.size());
    for (const auto& doc_id : doc_ids_) {
        double s = score(query, doc_id);
        if (s > 0.0) list.items.push_back({doc_id, s});
    }
    sort_ranked(list.items);
    if (list.items.size() > top_n) list.items.resize(top_n);
    return list;
}

std::vector<double> HashedTrigramEmbedder::embed(const std::string& text) {
    if (text.empty()) {
        throw Error(ErrorKind::EmptyText, "cannot embed empty text");
    }
    std::string folded = ascii_fold(text);
    std::vector<double> vec(dim_, 0.0);

    auto bump = [&](const char* data, size_t size) {
        // FNV-1a 64-bit over the gram's bytes.
        uint64_t hash = 0xCBF29CE484222325ull;
        for (size_t i = 0; i < size; ++i) {
            hash ^= static_cast<uint8_t>(data[i]);
            hash *= 0x100000001B3ull;
        }
        vec[hash % dim_] += 1.0;
    };

    if (folded.size() < 3) {
        bump(folded.data(), folded.size());
    } else {
        for (size_t i = 0; i + 3 <= folded.size(); ++i) {
            bump(folded.data() + i, 3);
        }
    }

    double norm = 0.0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& v : vec) v /= norm;
    }
    return vec;
}

std::string HashedTrigramEmbedder::version() const {
    return "hashed-trigram/fnv1a64/d" + std::to_string(dim_);
}

DenseIndex DenseIndex::build(const std::vector<std::pair<std::string, std::string>>& docs,
                             Embedder& embedder) {
    DenseIndex index;
    index.dim_ = embedder.dimension();
    index.embedder_version_ = embedder.version();
    std::unordered_map<std::string, size_t> seen;
    for (const auto& [doc_id, text] : docs) {
        if (!seen.emplace(doc_id, index.doc_ids_.size()).second) {
            throw Error(ErrorKind::DuplicateDocId, doc_id);
        }
        index.doc_ids_.push_back(doc_id);
        index.vectors_.push_back(embedder.embed(text));
    }
    return index;
}

RankedList DenseIndex::search(const std::vector<double>& query_vec, size_t top_n) const {
    if (query_vec.size() != dim_) {
        throw Error(ErrorKind::DimensionMismatch,
                    "query dimension " + std::to_string(query_vec.size()) + " vs index " +
                        std::to_string(dim_));
    }
    RankedList list;
    list.ranker = "dense";
    list.items.reserve(doc_ids_.size());
    for (size_t i = 0; i < doc_ids_.size(); ++i) {
        double dot = 0.0;
        for (size_t k = 0; k < dim_; ++k) dot += vectors_[i][k] * query_vec[k];
        list.items.push_back({doc_ids_[i], dot});
    }
    sort_ranked(list.items);
    if (list.items.size() > top_n) list.items.resize(top_n);
    return list;
}

std::vector<FusedItem> rrf_fuse(const std::vector<RankedList>& lists,
                                const std::vector<double>& weights, int rrf_k) {
    if (lists.empty() || lists.size() != weights.size()) {
        throw Error(ErrorKind::WeightCountMismatch,
                    std::to_string(lists.size()) + " lists vs " + std::to_string(weights.size()) +
                        " weights");
    }
    std::map<std::string, double> scores;
    for (size_t i = 0; i < lists.size(); ++i) {
        for (size_t rank = 0; rank < lists[i].items.size(); ++rank) {
            // Ranks are 1-based in the fusion formula.
            scores[lists[i].items[rank].doc_id] +=
                weights[i] / (static_cast<double>(rrf_k) + static_cast<double>(rank + 1));
        }
    }
    std::vector<FusedItem> fused;
    fused.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
        fused.push_back({doc_id, score});
    }
    std::sort(fused.begin(), fused.end(), [](const FusedItem& a, const FusedItem& b) {
        if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
        return a.doc_id < b.doc_id;
    });
    return fused;
}

std::array<CategoryIndexes, 4> build_indexes(const KnowledgeCorpus& corpus, Embedder& embedder) {
    std::array<CategoryIndexes, 4> indexes;
    for (FeatureCategory category : {FeatureCategory::Permission, FeatureCategory::Service,
                                     FeatureCategory::Receiver, FeatureCategory::IntentAction}) {
        std::vector<std::pair<std::string, std::string>> docs;
        for (const auto& entry : corpus.entries(category)) {
            docs.emplace_back(entry.name, entry.name + ": " + entry.description);
        }
        auto& slot = indexes[static_cast<size_t>(category)];
        slot.sparse = SparseIndex::build(docs);
        slot.dense = DenseIndex::build(docs, embedder);
    }
    return indexes;
}

RetrievalOutcome retrieve_description(const std::string& feature, FeatureCategory category,
                                      const KnowledgeCorpus& corpus,
                                      const std::array<CategoryIndexes, 4>& indexes,
                                      Embedder& embedder, const MatcherConfig& matcher_cfg,
                                      const EnsembleConfig& ensemble_cfg) {
    RetrievalOutcome outcome;
    outcome.match = match_feature(feature, category, corpus, matcher_cfg);
    if (outcome.match.outcome == MatchOutcome::Miss) {
        return outcome;
    }
    outcome.retrieved = true;
    outcome.entries.push_back(outcome.match.entry);

    const auto& slot = indexes[static_cast<size_t>(category)];
    RankedList sparse = slot.sparse.search(feature, ensemble_cfg.top_n);
    RankedList dense = slot.dense.search(embedder.embed(feature), ensemble_cfg.top_n);
    auto fused = rrf_fuse({sparse, dense}, {ensemble_cfg.weight_sparse, ensemble_cfg.weight_dense},
                          ensemble_cfg.rrf_k);

    for (const auto& item : fused) {
        if (outcome.entries.size() >= ensemble_cfg.top_n) break;
        const CorpusEntry* entry = corpus.find(category, item.doc_id);
        if (!entry) continue;
        bool already = false;
        for (const CorpusEntry* have : outcome.entries) {
            if (have == entry) {
                already = true;
                break;
            }
        }
        if (!already) outcome.entries.push_back(entry);
    }
    return outcome;
}

}  // namespace dexter
