#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "dexter/cache.hpp"
#include "dexter/corpus.hpp"
#include "dexter/features.hpp"
#include "dexter/prompts.hpp"
#include "dexter/retrieval.hpp"
#include "dexter/transport.hpp"

namespace dexter {

enum class DescribeMode { AgenticRag, Fusion };

struct DescriptionRecord {
    std::string apk_id;
    DescribeMode mode = DescribeMode::AgenticRag;
    // Provider assignment; for AgenticRag only `fusion_provider` is unused.
    std::string provider;        // final/primary model tag
    std::string gen_provider_a;  // fusion mode only
    std::string gen_provider_b;  // fusion mode only
    std::string description;
    std::string prompt_hash;  // SHA-256 of the final rendered prompt
    std::map<std::string, DescriptionSource> feature_sources;
    int64_t created_at = 0;
};

// Where each feature's text came from during one describe call, plus call
// counting for observability.
struct DescribeStats {
    size_t corpus_count = 0;
    size_t cache_count = 0;
    size_t llm_count = 0;
    size_t retrieval_calls = 0;
    size_t fallback_batches = 0;
};

struct DescriptionResult {
    DescriptionRecord record;
    DescribeStats stats;
};

// Shared plumbing for the per-feature grounding stage.
struct DescribePipeline {
    const KnowledgeCorpus* corpus = nullptr;
    const std::array<CategoryIndexes, 4>* indexes = nullptr;
    Embedder* embedder = nullptr;
    DescriptionCache* cache = nullptr;
    LlmGateway* gateway = nullptr;
    const TemplateSet* templates = nullptr;
    MatcherConfig matcher_cfg;
    EnsembleConfig ensemble_cfg;
    LlmEndpointConfig endpoint;  // model that writes the final description
    size_t fallback_batch_cap = 25;
};

// Batch-queries the model for features the corpus cannot ground. Returns
// name -> description covering every input feature, writing each result to
// the cache with source=Llm. Unparseable batches are retried once, then
// degraded to per-feature prompts; anything still missing raises
// Error(IncompleteBatch).
std::map<std::string, std::string> fallback_describe(
    const std::vector<std::pair<FeatureCategory, std::string>>& missing,
    const DescribePipeline& pipe, DescribeStats& stats);

// Full grounded pipeline for one app: cache, then ensemble retrieval, then
// batched fallback; final text from the configured model over the rendered
// statistics + grounded-info prompt.
DescriptionResult describe_agentic(const DescribePipeline& pipe,
                                   const StaticFeatureSet& features);

struct FusionEndpoints {
    LlmEndpointConfig gen_a;
    LlmEndpointConfig gen_b;
    LlmEndpointConfig fusion;
};

// Two independent generations over the raw feature block, merged by a third
// model. No corpus retrieval is involved.
DescriptionResult describe_fusion(LlmGateway& gateway, const TemplateSet& templates,
                                  const FusionEndpoints& endpoints,
                                  const StaticFeatureSet& features);

std::string description_record_to_json(const DescriptionRecord& record);
DescriptionRecord description_record_from_json(const std::string& line);

}  // namespace dexter
