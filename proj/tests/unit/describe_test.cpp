#include <doctest.h>

#include "dexter/cache.hpp"
#include "dexter/describe.hpp"
#include "dexter/errors.hpp"
#include "dexter/prompts.hpp"
#include "dexter/retrieval.hpp"
#include "dexter/transport.hpp"

using namespace dexter;

namespace {

const std::string kTemplatesDir = std::string(DEXTER_DATA_DIR) + "/templates";

KnowledgeCorpus make_corpus() {
    KnowledgeCorpus corpus;
    corpus.add({FeatureCategory::Permission, "android.permission.INTERNET",
                "Opens network sockets."});
    corpus.add({FeatureCategory::Permission, "android.permission.SEND_SMS",
                "Sends SMS messages."});
    corpus.add({FeatureCategory::Service, "com.example.sync.SyncService",
                "Synchronizes data with a backend."});
    return corpus;
}

// Bundles everything describe_agentic needs over a scripted transport.
struct PipelineHarness {
    KnowledgeCorpus corpus = make_corpus();
    HashedTrigramEmbedder embedder;
    std::array<CategoryIndexes, 4> indexes = build_indexes(corpus, embedder);
    DescriptionCache cache;
    std::shared_ptr<MockTransport> mock = std::make_shared<MockTransport>();
    LlmGateway gateway{mock, nullptr, [](int) {}};
    TemplateSet templates = TemplateSet::load(kTemplatesDir);
    DescribePipeline pipe;

    PipelineHarness() {
        pipe.corpus = &corpus;
        pipe.indexes = &indexes;
        pipe.embedder = &embedder;
        pipe.cache = &cache;
        pipe.gateway = &gateway;
        pipe.templates = &templates;
        pipe.endpoint.provider_tag = "mock-model";
        // Always answer the final description prompt.
        mock->reply(MockTransport::Match::Substring, "analyzing an app named",
                    "The app does things.");
    }
};

StaticFeatureSet corpus_only_features() {
    StaticFeatureSet features;
    features.apk_id = "apk-corpus-only";
    features.permissions = {"android.permission.INTERNET", "android.permission.SEND_SMS"};
    features.services = {"com.example.sync.SyncService"};
    return features;
}

}  // namespace

TEST_CASE("all features grounded from the corpus") {
    PipelineHarness h;
    auto result = describe_agentic(h.pipe, corpus_only_features());

    CHECK(result.record.apk_id == "apk-corpus-only");
    CHECK(result.record.description == "The app does things.");
    CHECK(result.record.mode == DescribeMode::AgenticRag);
    CHECK(result.record.provider == "mock-model");
    CHECK(result.record.prompt_hash.size() == 64);
    CHECK(result.stats.corpus_count == 3);
    CHECK(result.stats.cache_count == 0);
    CHECK(result.stats.llm_count == 0);
    CHECK(result.stats.retrieval_calls == 3);
    CHECK(result.stats.fallback_batches == 0);
    CHECK(h.mock->call_count() == 1);  // just the final prompt

    for (const auto& [name, source] : result.record.feature_sources) {
        CAPTURE(name);
        CHECK(source == DescriptionSource::Corpus);
    }
}

TEST_CASE("corpus hits are written to the cache and hit on the next call") {
    PipelineHarness h;
    describe_agentic(h.pipe, corpus_only_features());
    CHECK(h.cache.size() == 3);

    auto again = describe_agentic(h.pipe, corpus_only_features());
    CHECK(again.stats.cache_count == 3);
    CHECK(again.stats.corpus_count == 0);
    CHECK(again.stats.retrieval_calls == 0);
    for (const auto& [name, source] : again.record.feature_sources) {
        CHECK(source == DescriptionSource::Cache);
    }
}

TEST_CASE("misses fall back to a batched prompt and count as llm") {
    PipelineHarness h;
    h.mock->reply(MockTransport::Match::Substring, "no reference description is available",
                  "com.unknown.permission.FOO: Grants foo access.\n"
                  "com.unknown.BarService: Runs bar in the background.");

    StaticFeatureSet features;
    features.apk_id = "apk-with-misses";
    features.permissions = {"android.permission.INTERNET", "com.unknown.permission.FOO"};
    features.services = {"com.unknown.BarService"};

    auto result = describe_agentic(h.pipe, features);
    CHECK(result.stats.corpus_count == 1);
    CHECK(result.stats.llm_count == 2);
    CHECK(result.stats.fallback_batches == 1);
    CHECK(result.record.feature_sources.at("com.unknown.permission.FOO") ==
          DescriptionSource::Llm);
    CHECK(result.record.feature_sources.at("com.unknown.BarService") == DescriptionSource::Llm);
    // Final prompt + one fallback batch.
    CHECK(h.mock->call_count() == 2);

    // The generated descriptions land in the cache for the next run.
    auto cached = h.cache.get(FeatureCategory::Service, "com.unknown.BarService");
    REQUIRE(cached.has_value());
    CHECK(cached->source == DescriptionSource::Llm);
}

TEST_CASE("a partial batch response triggers one retry, then per-feature prompts") {
    PipelineHarness h;
    // The two-feature batch only answers FOO, so BarService is retried as a
    // one-feature batch; that retry returns garbage once, forcing the
    // per-feature pass, which finally succeeds.
    h.mock->reply(MockTransport::Match::Substring, "Output exactly 2 lines",
                  "com.unknown.permission.FOO: Grants foo access.");
    MockTransport::Rule single;
    single.match = MockTransport::Match::Substring;
    single.pattern = "Output exactly 1 lines";
    single.outcomes = {{MockTransport::OutcomeKind::Ok, "nothing useful here"},
                       {MockTransport::OutcomeKind::Ok,
                        "com.unknown.BarService: Runs bar in the background."}};
    h.mock->add_rule(single);

    StaticFeatureSet features;
    features.apk_id = "apk-partial-batch";
    features.permissions = {"com.unknown.permission.FOO"};
    features.services = {"com.unknown.BarService"};

    auto result = describe_agentic(h.pipe, features);
    CHECK(result.stats.llm_count == 2);
    // Two whole-batch rounds plus one single-feature prompt.
    CHECK(result.stats.fallback_batches == 3);
    // Those three plus the final description prompt.
    CHECK(h.mock->call_count() == 4);
}

TEST_CASE("a feature no response ever covers is an IncompleteBatch error") {
    PipelineHarness h;
    h.mock->reply(MockTransport::Match::Substring, "no reference description is available",
                  "some.other.name: Not the feature that was asked about.");

    StaticFeatureSet features;
    features.apk_id = "apk-incomplete";
    features.permissions = {"com.unknown.permission.FOO"};

    try {
        describe_agentic(h.pipe, features);
        FAIL("expected IncompleteBatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IncompleteBatch);
    }
}

TEST_CASE("batch responses tolerate list markers and category tags") {
    PipelineHarness h;
    h.mock->reply(MockTransport::Match::Substring, "no reference description is available",
                  "1. [permission] com.unknown.permission.FOO: Grants foo access.\n"
                  "- COM.UNKNOWN.BarService: Case differs but still matches.");

    StaticFeatureSet features;
    features.apk_id = "apk-messy-response";
    features.permissions = {"com.unknown.permission.FOO"};
    features.services = {"com.unknown.BarService"};

    auto result = describe_agentic(h.pipe, features);
    CHECK(result.stats.llm_count == 2);
    CHECK(result.stats.fallback_batches == 1);
}

TEST_CASE("fuzzy feature names ground to the corpus") {
    PipelineHarness h;
    StaticFeatureSet features;
    features.apk_id = "apk-fuzzy";
    features.permissions = {"android.permission.SEND_SMSS"};  // one extra character

    auto result = describe_agentic(h.pipe, features);
    CHECK(result.stats.corpus_count == 1);
    CHECK(result.record.feature_sources.at("android.permission.SEND_SMSS") ==
          DescriptionSource::Corpus);
    // Cached under the query spelling, not the corpus spelling.
    CHECK(h.cache.get(FeatureCategory::Permission, "android.permission.SEND_SMSS").has_value());
}

TEST_CASE("fusion mode calls two generators and one fusion model") {
    auto mock = std::make_shared<MockTransport>();
    mock->reply(MockTransport::Match::Substring, "<INPUT>", "candidate description");
    mock->reply(MockTransport::Match::Substring, "**Final Description:**", "fused description");
    LlmGateway gateway(mock, nullptr, [](int) {});
    auto templates = TemplateSet::load(kTemplatesDir);

    FusionEndpoints endpoints;
    endpoints.gen_a.provider_tag = "model-a";
    endpoints.gen_b.provider_tag = "model-b";
    endpoints.fusion.provider_tag = "model-c";

    auto result = describe_fusion(gateway, templates, endpoints, corpus_only_features());
    CHECK(result.record.description == "fused description");
    CHECK(result.record.mode == DescribeMode::Fusion);
    CHECK(result.record.provider == "model-c");
    CHECK(result.record.gen_provider_a == "model-a");
    CHECK(result.record.gen_provider_b == "model-b");
    CHECK(mock->call_count() == 3);
    CHECK(result.stats.llm_count == 3);  // every feature counted as generated

    for (const auto& [name, source] : result.record.feature_sources) {
        CHECK(source == DescriptionSource::Llm);
    }
}

TEST_CASE("description records round trip through json lines") {
    DescriptionRecord record;
    record.apk_id = "abc123";
    record.mode = DescribeMode::Fusion;
    record.provider = "model-c";
    record.gen_provider_a = "model-a";
    record.gen_provider_b = "model-b";
    record.description = "does things";
    record.prompt_hash = std::string(64, 'f');
    record.created_at = 1700000001;
    record.feature_sources["android.permission.X"] = DescriptionSource::Corpus;
    record.feature_sources["com.example.Y"] = DescriptionSource::Llm;

    auto line = description_record_to_json(record);
    CHECK(line.find('\n') == std::string::npos);
    auto parsed = description_record_from_json(line);
    CHECK(parsed.apk_id == record.apk_id);
    CHECK(parsed.mode == DescribeMode::Fusion);
    CHECK(parsed.provider == record.provider);
    CHECK(parsed.gen_provider_a == record.gen_provider_a);
    CHECK(parsed.description == record.description);
    CHECK(parsed.prompt_hash == record.prompt_hash);
    CHECK(parsed.created_at == record.created_at);
    CHECK(parsed.feature_sources.at("android.permission.X") == DescriptionSource::Corpus);
    CHECK(parsed.feature_sources.at("com.example.Y") == DescriptionSource::Llm);
}

TEST_CASE("malformed description records are typed errors") {
    CHECK_THROWS_AS(description_record_from_json("not json"), Error);
    CHECK_THROWS_AS(description_record_from_json(R"({"apk_id":"x"})"), Error);
}
