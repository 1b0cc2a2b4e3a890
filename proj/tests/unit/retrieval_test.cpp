#include <doctest.h>

#include <cmath>

#include "dexter/corpus.hpp"
#include "dexter/errors.hpp"
#include "dexter/retrieval.hpp"
#include "dexter/rng.hpp"

using namespace dexter;

namespace {

// Frozen outputs of tests/oracles/bm25_oracle.py for the three-document
// fixture with query "sms".
constexpr double kScoreD1 = 0.42081720292932145;
constexpr double kScoreD3 = 0.49917626830236761;
// Frozen output of 0.5/61 + 0.5/63 (rank 1 and rank 3, k=60).
constexpr double kRrfFused = 0.016133229247983348;

// Frozen outputs of tests/oracles/trigram_embed.py.
constexpr double kCosNear = 0.43643578047198484;
constexpr double kCosFar = 0.084515425472851666;

std::vector<std::pair<std::string, std::string>> three_docs() {
    return {{"d1", "sms message send"}, {"d2", "camera photo"}, {"d3", "send sms"}};
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

std::string random_words(Rng& rng) {
    static const char* kWords[] = {"sms",    "send",  "message", "camera", "photo",
                                   "boot",   "sync",  "network", "location", "audio",
                                   "record", "alarm", "upload",  "contact",  "phone"};
    size_t count = 1 + rng.next_below(8);
    std::string out;
    for (size_t i = 0; i < count; ++i) {
        if (i) out.push_back(' ');
        out += kWords[rng.next_below(15)];
    }
    return out;
}

}  // namespace

TEST_CASE("retrieval tokenization case folds and splits on non-alnum") {
    CHECK(retrieval_tokenize("android.permission.SEND_SMS") ==
          std::vector<std::string>{"android", "permission", "send", "sms"});
    CHECK(retrieval_tokenize("  A--B  c9 ") == std::vector<std::string>{"a", "b", "c9"});
    CHECK(retrieval_tokenize("...").empty());
}

TEST_CASE("bm25 scores match the oracle to 1e-9") {
    auto index = SparseIndex::build(three_docs());
    CHECK(index.size() == 3);
    CHECK(index.avgdl() == doctest::Approx(7.0 / 3.0).epsilon(1e-12));
    CHECK(index.doc_frequency("sms") == 2);
    CHECK(index.doc_frequency("camera") == 1);
    CHECK(index.doc_frequency("absent") == 0);

    CHECK(std::abs(index.score("sms", "d1") - kScoreD1) <= 1e-9);
    CHECK(index.score("sms", "d2") == doctest::Approx(0.0));
    CHECK(std::abs(index.score("sms", "d3") - kScoreD3) <= 1e-9);

    // Shorter document wins: d3 > d1 > d2.
    CHECK(index.score("sms", "d3") > index.score("sms", "d1"));
    CHECK(index.score("sms", "d1") > index.score("sms", "d2"));

    auto ranked = index.search("sms", 3);
    REQUIRE(ranked.items.size() >= 2);  // zero-score documents may be dropped
    CHECK(ranked.items[0].doc_id == "d3");
    CHECK(ranked.items[1].doc_id == "d1");
}

TEST_CASE("bm25 idf never goes negative for very common terms") {
    // "the" appears in every document; plain IDF would be negative.
    auto index = SparseIndex::build({{"a", "the cat"}, {"b", "the dog"}, {"c", "the bird"}});
    CHECK(index.score("the", "a") >= 0.0);
}

TEST_CASE("rrf fusion matches the closed-form value") {
    RankedList sparse{"sparse", {{"x", 9.0}, {"y", 5.0}, {"z", 1.0}}};
    RankedList dense{"dense", {{"y", 0.9}, {"w", 0.8}, {"x", 0.7}}};
    auto fused = rrf_fuse({sparse, dense}, {0.5, 0.5}, 60);
    REQUIRE(!fused.empty());

    double x_score = 0.0;
    for (const auto& item : fused) {
        if (item.doc_id == "x") x_score = item.fused_score;
    }
    // x is rank 1 in the sparse list and rank 3 in the dense list.
    CHECK(std::abs(x_score - kRrfFused) <= 1e-9);

    // Fused order is descending score.
    for (size_t i = 1; i < fused.size(); ++i) {
        CHECK(fused[i - 1].fused_score >= fused[i].fused_score);
    }
}

TEST_CASE("rrf absent documents contribute nothing and ties break on doc id") {
    RankedList only_a{"sparse", {{"a", 3.0}}};
    RankedList only_b{"dense", {{"b", 0.5}}};
    auto fused = rrf_fuse({only_a, only_b}, {0.5, 0.5}, 60);
    REQUIRE(fused.size() == 2);
    // Both get 0.5/61; the tie resolves to the smaller doc id.
    CHECK(fused[0].doc_id == "a");
    CHECK(fused[0].fused_score == doctest::Approx(fused[1].fused_score));
}

TEST_CASE("rrf weight count mismatch is a typed error") {
    RankedList a{"sparse", {{"a", 1.0}}};
    CHECK_THROWS_AS(rrf_fuse({a}, {0.5, 0.5}, 60), Error);
}

TEST_CASE("hashed trigram embedder is unit norm and deterministic") {
    HashedTrigramEmbedder embedder;
    CHECK(embedder.dimension() == 256);
    CHECK(embedder.version() == "hashed-trigram/fnv1a64/d256");

    auto v1 = embedder.embed("send sms message");
    auto v2 = embedder.embed("send sms message");
    CHECK(v1 == v2);
    double norm = std::sqrt(cosine(v1, v1));
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));

    // Case folding happens before hashing.
    CHECK(embedder.embed("SEND SMS MESSAGE") == v1);
    // Short texts still embed.
    auto tiny = embedder.embed("ab");
    CHECK(std::sqrt(cosine(tiny, tiny)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trigram cosine values match the oracle") {
    HashedTrigramEmbedder embedder;
    auto query = embedder.embed("send sms message");
    double near = cosine(query, embedder.embed("sms send"));
    double far = cosine(query, embedder.embed("camera photo"));
    CHECK(std::abs(near - kCosNear) <= 1e-9);
    CHECK(std::abs(far - kCosFar) <= 1e-9);
    CHECK(near > far);
}

TEST_CASE("dense search equals brute force cosine ranking on random corpora") {
    Rng rng(7);
    HashedTrigramEmbedder embedder;
    for (int round = 0; round < 200; ++round) {
        size_t doc_count = 1 + rng.next_below(64);
        std::vector<std::pair<std::string, std::string>> docs;
        docs.reserve(doc_count);
        for (size_t d = 0; d < doc_count; ++d) {
            docs.emplace_back("doc" + std::to_string(d), random_words(rng));
        }
        auto index = DenseIndex::build(docs, embedder);
        auto query_vec = embedder.embed(random_words(rng));
        size_t top_n = 1 + rng.next_below(8);
        auto got = index.search(query_vec, top_n);

        // Brute force reference with the same tie rule.
        std::vector<std::pair<double, std::string>> expected;
        for (const auto& [doc_id, text] : docs) {
            expected.emplace_back(cosine(query_vec, embedder.embed(text)), doc_id);
        }
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        REQUIRE(got.items.size() == std::min(top_n, doc_count));
        for (size_t i = 0; i < got.items.size(); ++i) {
            CAPTURE(round);
            CAPTURE(i);
            REQUIRE(got.items[i].doc_id == expected[i].second);
            REQUIRE(got.items[i].score == doctest::Approx(expected[i].first).epsilon(1e-9));
        }
    }
}

TEST_CASE("duplicate doc ids are a typed error") {
    HashedTrigramEmbedder embedder;
    CHECK_THROWS_AS(DenseIndex::build({{"a", "x"}, {"a", "y"}}, embedder), Error);
    CHECK_THROWS_AS(SparseIndex::build({{"a", "x"}, {"a", "y"}}), Error);
}

TEST_CASE("retrieve_description returns the anchor first, deduplicated") {
    auto corpus = load_corpus(std::string(DEXTER_FIXTURES_DIR) + "/mini_corpus");
    HashedTrigramEmbedder embedder;
    auto indexes = build_indexes(corpus, embedder);

    auto outcome = retrieve_description("android.permission.SEND_SMS",
                                        FeatureCategory::Permission, corpus, indexes, embedder,
                                        MatcherConfig{}, EnsembleConfig{});
    CHECK(outcome.retrieved);
    CHECK(outcome.match.outcome == MatchOutcome::Exact);
    REQUIRE(!outcome.entries.empty());
    CHECK(outcome.entries.size() <= EnsembleConfig{}.top_n);
    CHECK(outcome.entries.front()->name == "android.permission.SEND_SMS");
    for (size_t i = 1; i < outcome.entries.size(); ++i) {
        CHECK(outcome.entries[i]->name != outcome.entries.front()->name);
        CHECK(outcome.entries[i]->category == FeatureCategory::Permission);
    }
}

TEST_CASE("retrieve_description reports a miss for foreign names") {
    auto corpus = load_corpus(std::string(DEXTER_FIXTURES_DIR) + "/mini_corpus");
    HashedTrigramEmbedder embedder;
    auto indexes = build_indexes(corpus, embedder);

    auto outcome = retrieve_description("com.totally.unrelated.Thing", FeatureCategory::Service,
                                        corpus, indexes, embedder, MatcherConfig{},
                                        EnsembleConfig{});
    CHECK(!outcome.retrieved);
    CHECK(outcome.entries.empty());
}
