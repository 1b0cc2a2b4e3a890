#include "dexter/describe.hpp"

#include <ctime>

#include <nlohmann/json.hpp>

#include "dexter/errors.hpp"
#include "dexter/sha256.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

using nlohmann::json;

constexpr FeatureCategory kCategoryOrder[] = {
    FeatureCategory::Permission,
    FeatureCategory::Service,
    FeatureCategory::Receiver,
    FeatureCategory::IntentAction,
};

// Strips an optional "N." or "-" list marker from the front of a line.
std::string strip_list_marker(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && line[i] == ' ') ++i;
    size_t digits = i;
    while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
    if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
        return trim(line.substr(digits + 1));
    }
    if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
        return trim(line.substr(i + 1));
    }
    return trim(line);
}

// Parses "name: description" lines against the still-missing features,
// matching names case-insensitively; resolved features move into `out`.
void absorb_batch_response(const std::string& response,
                           std::vector<std::pair<FeatureCategory, std::string>>& remaining,
                           const DescribePipeline& pipe,
                           std::map<std::string, std::string>& out) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : response) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) lines.push_back(current);

    int64_t now = static_cast<int64_t>(std::time(nullptr));
    for (const auto& raw_line : lines) {
        std::string line = strip_list_marker(raw_line);
        size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string name = trim(line.substr(0, colon));
        std::string description = trim(line.substr(colon + 1));
        // Tolerate a "[category]" tag the model may have copied.
        if (!name.empty() && name.front() == '[') {
            size_t close = name.find(']');
            if (close != std::string::npos) name = trim(name.substr(close + 1));
        }
        if (name.empty() || description.empty()) continue;

        std::string folded = ascii_fold(name);
        for (auto it = remaining.begin(); it != remaining.end(); ++it) {
            if (ascii_fold(it->second) != folded) continue;
            out[it->second] = description;
            CacheEntry entry;
            entry.category = it->first;
            entry.name = it->second;
            entry.description = description;
            entry.source = DescriptionSource::Llm;
            entry.created_at = now;
            pipe.cache->put(entry);
            remaining.erase(it);
            break;
        }
    }
}

std::string render_fallback_prompt(
    const std::vector<std::pair<FeatureCategory, std::string>>& batch,
    const TemplateSet& templates) {
    std::string feature_list;
    for (size_t i = 0; i < batch.size(); ++i) {
        feature_list.append(std::to_string(i + 1));
        feature_list.append(". [");
        feature_list.append(category_name(batch[i].first));
        feature_list.append("] ");
        feature_list.append(batch[i].second);
        if (i + 1 < batch.size()) feature_list.push_back('\n');
    }
    return templates.fallback.render(
        {{"feature_list", feature_list}, {"feature_count", std::to_string(batch.size())}});
}

}  // namespace

std::map<std::string, std::string> fallback_describe(
    const std::vector<std::pair<FeatureCategory, std::string>>& missing,
    const DescribePipeline& pipe, DescribeStats& stats) {
    std::map<std::string, std::string> out;
    if (missing.empty()) return out;

    size_t cap = pipe.fallback_batch_cap == 0 ? 25 : pipe.fallback_batch_cap;
    for (size_t begin = 0; begin < missing.size(); begin += cap) {
        size_t end = std::min(begin + cap, missing.size());
        std::vector<std::pair<FeatureCategory, std::string>> remaining(missing.begin() + begin,
                                                                       missing.begin() + end);

        // First attempt, then one whole-batch retry for whatever failed to
        // parse, then one prompt per stubborn feature.
        for (int round = 0; round < 2 && !remaining.empty(); ++round) {
            std::string prompt = render_fallback_prompt(remaining, *pipe.templates);
            std::string response = pipe.gateway->complete(pipe.endpoint, prompt);
            ++stats.fallback_batches;
            absorb_batch_response(response, remaining, pipe, out);
        }
        for (size_t i = 0; i < remaining.size();) {
            std::vector<std::pair<FeatureCategory, std::string>> single{remaining[i]};
            std::string prompt = render_fallback_prompt(single, *pipe.templates);
            std::string response = pipe.gateway->complete(pipe.endpoint, prompt);
            ++stats.fallback_batches;
            size_t before = remaining.size();
            absorb_batch_response(response, remaining, pipe, out);
            if (remaining.size() == before) {
                throw Error(ErrorKind::IncompleteBatch,
                            "no usable description for '" + remaining[i].second + "'");
            }
        }
    }
    return out;
}

DescriptionResult describe_agentic(const DescribePipeline& pipe,
                                   const StaticFeatureSet& features) {
    DescriptionResult result;
    DescribeStats& stats = result.stats;

    std::map<std::pair<FeatureCategory, std::string>, std::string> descriptions;
    std::vector<std::pair<FeatureCategory, std::string>> missing;
    int64_t now = static_cast<int64_t>(std::time(nullptr));

    for (FeatureCategory category : kCategoryOrder) {
        for (const auto& name : features.category(category)) {
            if (auto hit = pipe.cache->get(category, name)) {
                descriptions[{category, name}] = hit->description;
                result.record.feature_sources[name] = DescriptionSource::Cache;
                ++stats.cache_count;
                continue;
            }
            ++stats.retrieval_calls;
            RetrievalOutcome outcome =
                retrieve_description(name, category, *pipe.corpus, *pipe.indexes, *pipe.embedder,
                                     pipe.matcher_cfg, pipe.ensemble_cfg);
            if (outcome.retrieved) {
                const CorpusEntry* anchor = outcome.entries.front();
                descriptions[{category, name}] = anchor->description;
                result.record.feature_sources[name] = DescriptionSource::Corpus;
                ++stats.corpus_count;

                CacheEntry entry;
                entry.category = category;
                entry.name = name;
                entry.description = anchor->description;
                entry.source = DescriptionSource::Corpus;
                entry.created_at = now;
                pipe.cache->put(entry);
            } else {
                missing.emplace_back(category, name);
            }
        }
    }

    if (!missing.empty()) {
        auto generated = fallback_describe(missing, pipe, stats);
        for (const auto& [category, name] : missing) {
            descriptions[{category, name}] = generated.at(name);
            result.record.feature_sources[name] = DescriptionSource::Llm;
            ++stats.llm_count;
        }
    }

    PromptContext ctx;
    ctx.apk_name = features.apk_id;
    ctx.total_permissions = features.permissions.size();
    ctx.total_services = features.services.size();
    ctx.total_receivers = features.receivers.size();
    ctx.total_intents = features.intent_actions.size();
    ctx.formatted_info = build_formatted_info(features, descriptions);

    std::string prompt = render_agentic_prompt(ctx, pipe.templates->agentic);
    result.record.description = pipe.gateway->complete(pipe.endpoint, prompt);
    result.record.apk_id = features.apk_id;
    result.record.mode = DescribeMode::AgenticRag;
    result.record.provider = pipe.endpoint.provider_tag;
    result.record.prompt_hash = sha256_hex(prompt);
    result.record.created_at = static_cast<int64_t>(std::time(nullptr));
    return result;
}

DescriptionResult describe_fusion(LlmGateway& gateway, const TemplateSet& templates,
                                  const FusionEndpoints& endpoints,
                                  const StaticFeatureSet& features) {
    DescriptionResult result;
    std::string static_features_str = build_static_features_str(features);

    std::string prompt_a = render_generator_prompt(static_features_str, templates.generator);
    std::string description1 = gateway.complete(endpoints.gen_a, prompt_a);
    std::string prompt_b = render_generator_prompt(static_features_str, templates.generator);
    std::string description2 = gateway.complete(endpoints.gen_b, prompt_b);

    std::string fusion_prompt = render_fusion_prompt(features.apk_id, static_features_str,
                                                     description1, description2, templates.fusion);
    result.record.description = gateway.complete(endpoints.fusion, fusion_prompt);
    result.record.apk_id = features.apk_id;
    result.record.mode = DescribeMode::Fusion;
    result.record.provider = endpoints.fusion.provider_tag;
    result.record.gen_provider_a = endpoints.gen_a.provider_tag;
    result.record.gen_provider_b = endpoints.gen_b.provider_tag;
    result.record.prompt_hash = sha256_hex(fusion_prompt);
    result.record.created_at = static_cast<int64_t>(std::time(nullptr));

    // No grounding stage in this mode: every feature went straight to the
    // generators.
    for (FeatureCategory category : kCategoryOrder) {
        for (const auto& name : features.category(category)) {
            result.record.feature_sources[name] = DescriptionSource::Llm;
        }
    }
    result.stats.llm_count = result.record.feature_sources.size();
    return result;
}

std::string description_record_to_json(const DescriptionRecord& record) {
    json doc;
    doc["apk_id"] = record.apk_id;
    doc["mode"] = record.mode == DescribeMode::AgenticRag ? "agentic-rag" : "fusion";
    doc["provider"] = record.provider;
    if (record.mode == DescribeMode::Fusion) {
        doc["gen_provider_a"] = record.gen_provider_a;
        doc["gen_provider_b"] = record.gen_provider_b;
    }
    doc["description"] = record.description;
    doc["prompt_hash"] = record.prompt_hash;
    json sources = json::object();
    for (const auto& [name, source] : record.feature_sources) {
        sources[name] = source_name(source);
    }
    doc["feature_sources"] = sources;
    doc["created_at"] = record.created_at;
    return doc.dump();
}

DescriptionRecord description_record_from_json(const std::string& line) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("apk_id") ||
        !doc.contains("description")) {
        throw Error(ErrorKind::MalformedRecord, "bad description record");
    }
    DescriptionRecord record;
    record.apk_id = doc["apk_id"].get<std::string>();
    record.mode =
        doc.value("mode", "agentic-rag") == "fusion" ? DescribeMode::Fusion : DescribeMode::AgenticRag;
    record.provider = doc.value("provider", "");
    record.gen_provider_a = doc.value("gen_provider_a", "");
    record.gen_provider_b = doc.value("gen_provider_b", "");
    record.description = doc["description"].get<std::string>();
    record.prompt_hash = doc.value("prompt_hash", "");
    record.created_at = doc.value("created_at", static_cast<int64_t>(0));
    if (doc.contains("feature_sources") && doc["feature_sources"].is_object()) {
        for (const auto& [name, value] : doc["feature_sources"].items()) {
            std::string source = value.get<std::string>();
            DescriptionSource parsed = DescriptionSource::Llm;
            if (source == "corpus") parsed = DescriptionSource::Corpus;
            else if (source == "cache") parsed = DescriptionSource::Cache;
            record.feature_sources[name] = parsed;
        }
    }
    return record;
}

}  // namespace dexter
