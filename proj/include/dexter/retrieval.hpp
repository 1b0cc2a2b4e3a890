#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dexter/corpus.hpp"
#include "dexter/matcher.hpp"

namespace dexter {

// Tokenization shared by the sparse ranker: case-fold, split on
// non-alphanumeric runs, drop empties.
std::vector<std::string> retrieval_tokenize(const std::string& text);

struct RankedItem {
    std::string doc_id;
    double score = 0.0;
};

struct RankedList {
    std::string ranker;  // "sparse" or "dense"
    std::vector<RankedItem> items;  // descending score, ties ascending doc_id
};

// Okapi BM25 index with the +1 inside the IDF log, so scores are never
// negative. k1=1.2, b=0.75 unless overridden.
class SparseIndex {
public:
    SparseIndex() = default;

    static SparseIndex build(const std::vector<std::pair<std::string, std::string>>& docs,
                             double k1 = 1.2, double b = 0.75);

    double score(const std::string& query, const std::string& doc_id) const;
    RankedList search(const std::string& query, size_t top_n) const;

    size_t size() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }
    size_t doc_frequency(const std::string& term) const;

private:
    std::vector<std::string> doc_ids_;
    std::vector<std::unordered_map<std::string, size_t>> term_counts_;
    std::vector<size_t> doc_lengths_;
    std::unordered_map<std::string, size_t> doc_frequency_;
    std::unordered_map<std::string, size_t> id_to_index_;
    double avgdl_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
};

// Embeds text into a unit vector of fixed dimension.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual size_t dimension() const = 0;
    virtual std::string version() const = 0;
};

// Deterministic local embedder: character 3-grams of the case-folded UTF-8
// bytes, hashed (FNV-1a 64) into `dim` buckets, term-frequency weighted,
// L2-normalized. Texts shorter than 3 bytes contribute a single gram.
class HashedTrigramEmbedder : public Embedder {
public:
    explicit HashedTrigramEmbedder(size_t dim = 256) : dim_(dim) {}

    std::vector<double> embed(const std::string& text) override;
    size_t dimension() const override { return dim_; }
    std::string version() const override;

private:
    size_t dim_;
};

class DenseIndex {
public:
    DenseIndex() = default;

    // Embeds and stores every document. Throws Error(DuplicateDocId).
    static DenseIndex build(const std::vector<std::pair<std::string, std::string>>& docs,
                            Embedder& embedder);

    // Exact top-n by dot product (vectors are unit-norm, so this is cosine).
    RankedList search(const std::vector<double>& query_vec, size_t top_n) const;

    size_t size() const { return doc_ids_.size(); }
    size_t dimension() const { return dim_; }
    const std::string& embedder_version() const { return embedder_version_; }

private:
    std::vector<std::string> doc_ids_;
    std::vector<std::vector<double>> vectors_;
    size_t dim_ = 0;
    std::string embedder_version_;
};

struct EnsembleConfig {
    double weight_sparse = 0.5;
    double weight_dense = 0.5;
    int rrf_k = 60;
    size_t top_n = 3;
};

struct FusedItem {
    std::string doc_id;
    double fused_score = 0.0;
};

// Reciprocal Rank Fusion over any number of ranked lists with aligned
// weights; a document absent from a list contributes nothing for it.
std::vector<FusedItem> rrf_fuse(const std::vector<RankedList>& lists,
                                const std::vector<double>& weights, int rrf_k);

// Both retrieval indexes for one feature category, built over documents of
// the form "name: description".
struct CategoryIndexes {
    SparseIndex sparse;
    DenseIndex dense;
};

struct RetrievalOutcome {
    bool retrieved = false;
    MatchResult match;                        // anchor decision
    std::vector<const CorpusEntry*> entries;  // anchor first, then fused results
};

// Builds sparse + dense indexes for every category of the corpus.
std::array<CategoryIndexes, 4> build_indexes(const KnowledgeCorpus& corpus, Embedder& embedder);

// Anchor via match_feature; on a hit, returns the anchor entry followed by
// deduplicated RRF ensemble results, at most top_n entries total. On a
// matcher miss, reports not-retrieved so the caller can fall back.
RetrievalOutcome retrieve_description(const std::string& feature, FeatureCategory category,
                                      const KnowledgeCorpus& corpus,
                                      const std::array<CategoryIndexes, 4>& indexes,
                                      Embedder& embedder, const MatcherConfig& matcher_cfg,
                                      const EnsembleConfig& ensemble_cfg);

}  // namespace dexter
