// dexter: batch pipeline from APK static features to grounded functional
// descriptions, plus a train/eval harness for classifying those
// descriptions as benign or malicious.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dexter/cache.hpp"
#include "dexter/classify.hpp"
#include "dexter/corpus.hpp"
#include "dexter/describe.hpp"
#include "dexter/errors.hpp"
#include "dexter/external_classifier.hpp"
#include "dexter/features.hpp"
#include "dexter/labeling.hpp"
#include "dexter/matcher.hpp"
#include "dexter/prompts.hpp"
#include "dexter/retrieval.hpp"
#include "dexter/textprep.hpp"
#include "dexter/transport.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct AppConfig {
    std::string corpus_dir = "data/corpus";
    std::string templates_dir = "data/templates";
    std::string stopwords_path = "data/stopwords_en.txt";
    std::string cache_path = "cache.jsonl";
    double fuzzy_threshold = 0.65;
    dexter::EnsembleConfig ensemble;
    size_t embedder_dim = 256;
    uint64_t seed = 1;
    size_t workers = 0;  // 0 = number of processors
    std::string mock_script;
    dexter::LlmEndpointConfig agentic;
    dexter::FusionEndpoints fusion;
    std::string classifier_kind = "baseline";
    dexter::ExternalEndpoint external;
    dexter::BaselineConfig baseline;
};

dexter::LlmEndpointConfig default_gemini_endpoint(const std::string& model) {
    dexter::LlmEndpointConfig cfg;
    cfg.provider_tag = model;
    cfg.base_url = "https://generativelanguage.googleapis.com";
    cfg.api_style = "gemini";
    cfg.api_key_env_var = "GEMINI_API_KEY";
    return cfg;
}

dexter::LlmEndpointConfig default_openai_endpoint(const std::string& model) {
    dexter::LlmEndpointConfig cfg;
    cfg.provider_tag = model;
    cfg.base_url = "https://api.deepseek.com";
    cfg.api_style = "openai";
    cfg.api_key_env_var = "DEEPSEEK_API_KEY";
    return cfg;
}

AppConfig default_config() {
    AppConfig cfg;
    cfg.agentic = default_gemini_endpoint("gemini-2.0-flash-lite");
    cfg.fusion.gen_a = default_gemini_endpoint("gemini-2.0-flash-lite");
    cfg.fusion.gen_b = default_openai_endpoint("deepseek-chat");
    cfg.fusion.fusion = default_gemini_endpoint("gemini-2.0-flash");
    return cfg;
}

void overlay_endpoint(dexter::LlmEndpointConfig& cfg, const json& doc) {
    if (!doc.is_object()) {
        throw dexter::Error(dexter::ErrorKind::ConfigError, "endpoint config must be an object");
    }
    cfg.provider_tag = doc.value("provider_tag", cfg.provider_tag);
    cfg.base_url = doc.value("base_url", cfg.base_url);
    cfg.api_style = doc.value("api_style", cfg.api_style);
    cfg.api_key_env_var = doc.value("api_key_env_var", cfg.api_key_env_var);
    cfg.max_retries = doc.value("max_retries", cfg.max_retries);
    cfg.backoff_base_ms = doc.value("backoff_base_ms", cfg.backoff_base_ms);
    cfg.max_concurrency = doc.value("max_concurrency", cfg.max_concurrency);
    cfg.timeout_s = doc.value("timeout_s", cfg.timeout_s);
    cfg.temperature = doc.value("temperature", cfg.temperature);
    cfg.max_output_tokens = doc.value("max_output_tokens", cfg.max_output_tokens);
}

AppConfig load_config(const std::string& path) {
    AppConfig cfg = default_config();
    if (path.empty()) return cfg;

    std::ifstream in(path);
    if (!in) {
        throw dexter::Error(dexter::ErrorKind::ConfigError, "cannot open config " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw dexter::Error(dexter::ErrorKind::ConfigError, "config " + path + " is not a JSON object");
    }

    cfg.corpus_dir = doc.value("corpus_dir", cfg.corpus_dir);
    cfg.templates_dir = doc.value("templates_dir", cfg.templates_dir);
    cfg.stopwords_path = doc.value("stopwords_path", cfg.stopwords_path);
    cfg.cache_path = doc.value("cache_path", cfg.cache_path);
    cfg.fuzzy_threshold = doc.value("fuzzy_threshold", cfg.fuzzy_threshold);
    cfg.embedder_dim = doc.value("embedder_dim", cfg.embedder_dim);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.workers = doc.value("workers", cfg.workers);
    cfg.mock_script = doc.value("mock_script", cfg.mock_script);
    if (doc.contains("ensemble")) {
        const json& e = doc["ensemble"];
        cfg.ensemble.weight_sparse = e.value("weight_sparse", cfg.ensemble.weight_sparse);
        cfg.ensemble.weight_dense = e.value("weight_dense", cfg.ensemble.weight_dense);
        cfg.ensemble.rrf_k = e.value("rrf_k", cfg.ensemble.rrf_k);
        cfg.ensemble.top_n = e.value("top_n", cfg.ensemble.top_n);
    }
    if (doc.contains("agentic")) overlay_endpoint(cfg.agentic, doc["agentic"]);
    if (doc.contains("fusion")) {
        const json& f = doc["fusion"];
        if (f.contains("gen_a")) overlay_endpoint(cfg.fusion.gen_a, f["gen_a"]);
        if (f.contains("gen_b")) overlay_endpoint(cfg.fusion.gen_b, f["gen_b"]);
        if (f.contains("fusion")) overlay_endpoint(cfg.fusion.fusion, f["fusion"]);
    }
    if (doc.contains("classifier")) {
        const json& c = doc["classifier"];
        cfg.classifier_kind = c.value("kind", cfg.classifier_kind);
        if (c.contains("command")) {
            cfg.external.command = c["command"].get<std::vector<std::string>>();
        }
        cfg.external.host = c.value("host", cfg.external.host);
        cfg.external.port = c.value("port", cfg.external.port);
        cfg.external.timeout_s = c.value("timeout_s", cfg.external.timeout_s);
        cfg.external.batch_size = c.value("batch_size", cfg.external.batch_size);
    }
    if (doc.contains("baseline")) {
        const json& b = doc["baseline"];
        cfg.baseline.dimension = b.value("dimension", cfg.baseline.dimension);
        cfg.baseline.learning_rate = b.value("learning_rate", cfg.baseline.learning_rate);
        cfg.baseline.max_epochs = b.value("max_epochs", cfg.baseline.max_epochs);
        cfg.baseline.patience = b.value("patience", cfg.baseline.patience);
        cfg.baseline.seed = b.value("seed", cfg.baseline.seed);
    }
    if (cfg.classifier_kind != "baseline" && cfg.classifier_kind != "external") {
        throw dexter::Error(dexter::ErrorKind::ConfigError,
                            "classifier.kind must be baseline or external");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Small utilities

int64_t now_epoch_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

class Timer {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Structured log: one JSON object per line on stderr.
void log_event(json fields) {
    fields["ts"] = now_epoch_seconds();
    std::cerr << fields.dump() << "\n";
}

size_t effective_workers(size_t configured) {
    if (configured > 0) return configured;
    unsigned n = std::thread::hardware_concurrency();
    return n > 0 ? n : 1;
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception wins and is rethrown after all threads join.
void run_parallel(size_t count, size_t workers, const std::function<void(size_t)>& fn) {
    workers = std::min(std::max<size_t>(workers, 1), count > 0 ? count : 1);
    if (workers <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= count) return;
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error) return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& thread : pool) thread.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw dexter::Error(dexter::ErrorKind::IoError, "cannot open " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_text_file(const std::string& path, const std::string& content) {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw dexter::Error(dexter::ErrorKind::IoError, "cannot write " + path);
    }
    out << content;
}

// Dispatches requests to per-model transports, so one gateway can serve
// endpoints hosted by different providers.
class RoutingTransport : public dexter::Transport {
public:
    void add(const std::string& model, std::shared_ptr<dexter::Transport> transport) {
        routes_[model] = std::move(transport);
    }

    dexter::LlmResponse send(const dexter::LlmRequest& request) override {
        auto it = routes_.find(request.model);
        if (it == routes_.end()) {
            throw dexter::Error(dexter::ErrorKind::ConfigError,
                                "no transport configured for model " + request.model);
        }
        return it->second->send(request);
    }

private:
    std::map<std::string, std::shared_ptr<dexter::Transport>> routes_;
};

// ---------------------------------------------------------------------------
// Subcommand arguments

struct ExtractArgs {
    std::vector<std::string> inputs;
    std::string out;
    size_t workers = 0;
    bool workers_set = false;
};

struct LabelArgs {
    std::string reports_dir;
    std::string out;
};

struct DescribeArgs {
    std::string features_path;
    std::string out;
    std::string mode = "agentic-rag";
    bool offline = false;
    std::string transcript_path;
    std::string stats_path;
    std::string cache_path;
    std::string mock_script;
    double fuzzy_threshold = -1.0;  // <0 = use config
    size_t workers = 0;
    bool workers_set = false;
};

struct PreprocessArgs {
    std::string in;
    std::string out;
    std::string stopwords;
};

struct SplitArgs {
    std::string labels;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
};

struct TrainArgs {
    std::string texts;
    std::string split_dir;
    std::string out;
    uint64_t seed = 0;
    bool seed_set = false;
    size_t epochs = 0;
    bool epochs_set = false;
    size_t patience = 0;
    bool patience_set = false;
    double learning_rate = 0.0;
    bool learning_rate_set = false;
};

struct EvalArgs {
    std::string texts;
    std::string split_dir;
    std::string model;
    std::string out;
    std::string confusion;
    std::string classifier;  // empty = config choice
    std::vector<std::string> external_command;
    std::string external_host;
    uint16_t external_port = 0;
};

struct CompareArgs {
    std::string a;
    std::string b;
    std::string name_a = "A";
    std::string name_b = "B";
};

// ---------------------------------------------------------------------------
// extract

void cmd_extract(const AppConfig& cfg, const ExtractArgs& args) {
    std::vector<std::string> apk_paths;
    for (const auto& input : args.inputs) {
        if (std::filesystem::is_directory(input)) {
            std::vector<std::string> found;
            for (const auto& entry : std::filesystem::directory_iterator(input)) {
                if (entry.is_regular_file() && entry.path().extension() == ".apk") {
                    found.push_back(entry.path().string());
                }
            }
            std::sort(found.begin(), found.end());
            apk_paths.insert(apk_paths.end(), found.begin(), found.end());
        } else if (std::filesystem::is_regular_file(input)) {
            apk_paths.push_back(input);
        } else {
            throw dexter::Error(dexter::ErrorKind::IoError, "no such file or directory: " + input);
        }
    }
    if (apk_paths.empty()) {
        throw dexter::Error(dexter::ErrorKind::IoError, "no .apk files found in the inputs");
    }

    std::vector<dexter::StaticFeatureSet> sets(apk_paths.size());
    size_t workers = effective_workers(args.workers_set ? args.workers : cfg.workers);
    run_parallel(apk_paths.size(), workers, [&](size_t i) {
        Timer timer;
        sets[i] = dexter::extract_from_apk(apk_paths[i]);
        log_event({{"stage", "extract"},
                   {"apk_id", sets[i].apk_id},
                   {"file", apk_paths[i]},
                   {"ms", timer.ms()},
                   {"permissions", sets[i].permissions.size()},
                   {"services", sets[i].services.size()},
                   {"receivers", sets[i].receivers.size()},
                   {"intent_actions", sets[i].intent_actions.size()}});
    });

    dexter::write_features_json(sets, args.out);
    log_event({{"stage", "extract"}, {"apks", sets.size()}, {"out", args.out}});
}

// ---------------------------------------------------------------------------
// label

void cmd_label(const LabelArgs& args) {
    Timer timer;
    auto labels = dexter::label_directory(args.reports_dir);
    dexter::write_labels_json(labels, args.out);
    size_t malicious = 0;
    for (const auto& sample : labels) {
        if (sample.label == dexter::Label::Malicious) ++malicious;
    }
    log_event({{"stage", "label"},
               {"reports", labels.size()},
               {"malicious", malicious},
               {"benign", labels.size() - malicious},
               {"ms", timer.ms()},
               {"out", args.out}});
}

// ---------------------------------------------------------------------------
// corpus validate

void cmd_corpus_validate(const AppConfig& cfg, const std::string& corpus_dir) {
    const std::string& dir = corpus_dir.empty() ? cfg.corpus_dir : corpus_dir;
    auto corpus = dexter::load_corpus(dir);
    auto stats = dexter::corpus_stats(corpus);
    json out;
    size_t total = 0;
    for (const auto& [category, count] : stats) {
        out[dexter::category_name(category)] = count;
        total += count;
    }
    out["total"] = total;
    std::cout << out.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// describe

std::shared_ptr<dexter::Transport> build_transport(const AppConfig& cfg, const DescribeArgs& args,
                                                   bool include_fusion_models) {
    if (args.offline) {
        const std::string& script = !args.mock_script.empty() ? args.mock_script : cfg.mock_script;
        if (script.empty()) {
            // Loud by design: every prompt is unscripted and fails.
            return std::make_shared<dexter::MockTransport>();
        }
        return dexter::MockTransport::from_script_file(script);
    }
    auto routing = std::make_shared<RoutingTransport>();
    if (include_fusion_models) {
        routing->add(cfg.fusion.gen_a.provider_tag,
                     std::make_shared<dexter::HttpTransport>(cfg.fusion.gen_a));
        routing->add(cfg.fusion.gen_b.provider_tag,
                     std::make_shared<dexter::HttpTransport>(cfg.fusion.gen_b));
        routing->add(cfg.fusion.fusion.provider_tag,
                     std::make_shared<dexter::HttpTransport>(cfg.fusion.fusion));
    } else {
        routing->add(cfg.agentic.provider_tag,
                     std::make_shared<dexter::HttpTransport>(cfg.agentic));
    }
    return routing;
}

void cmd_describe(const AppConfig& cfg, const DescribeArgs& args) {
    if (args.mode != "agentic-rag" && args.mode != "fusion") {
        throw dexter::Error(dexter::ErrorKind::UsageError,
                            "--mode must be agentic-rag or fusion, got " + args.mode);
    }
    bool fusion_mode = args.mode == "fusion";

    auto features = dexter::load_features_json(args.features_path);
    auto templates = dexter::TemplateSet::load(cfg.templates_dir);

    std::optional<dexter::Transcript> transcript;
    if (!args.transcript_path.empty()) transcript.emplace(args.transcript_path);

    auto transport = build_transport(cfg, args, fusion_mode);
    dexter::LlmGateway gateway(transport, transcript ? &*transcript : nullptr);

    std::vector<dexter::DescriptionResult> results(features.size());
    size_t workers = effective_workers(args.workers_set ? args.workers : cfg.workers);

    if (fusion_mode) {
        run_parallel(features.size(), workers, [&](size_t i) {
            Timer timer;
            results[i] = dexter::describe_fusion(gateway, templates, cfg.fusion, features[i]);
            log_event({{"stage", "describe"},
                       {"mode", args.mode},
                       {"apk_id", features[i].apk_id},
                       {"ms", timer.ms()}});
        });
    } else {
        auto corpus = dexter::load_corpus(cfg.corpus_dir);
        dexter::HashedTrigramEmbedder embedder(cfg.embedder_dim);
        auto indexes = dexter::build_indexes(corpus, embedder);
        dexter::DescriptionCache cache(!args.cache_path.empty() ? args.cache_path
                                                                : cfg.cache_path);

        dexter::DescribePipeline pipe;
        pipe.corpus = &corpus;
        pipe.indexes = &indexes;
        pipe.embedder = &embedder;
        pipe.cache = &cache;
        pipe.gateway = &gateway;
        pipe.templates = &templates;
        pipe.matcher_cfg.threshold =
            args.fuzzy_threshold >= 0.0 ? args.fuzzy_threshold : cfg.fuzzy_threshold;
        pipe.ensemble_cfg = cfg.ensemble;
        pipe.endpoint = cfg.agentic;

        run_parallel(features.size(), workers, [&](size_t i) {
            Timer timer;
            results[i] = dexter::describe_agentic(pipe, features[i]);
            const auto& stats = results[i].stats;
            log_event({{"stage", "describe"},
                       {"mode", args.mode},
                       {"apk_id", features[i].apk_id},
                       {"ms", timer.ms()},
                       {"corpus", stats.corpus_count},
                       {"cache", stats.cache_count},
                       {"llm", stats.llm_count}});
        });
    }

    std::string body;
    dexter::DescribeStats totals;
    for (const auto& result : results) {
        body += dexter::description_record_to_json(result.record);
        body += '\n';
        totals.corpus_count += result.stats.corpus_count;
        totals.cache_count += result.stats.cache_count;
        totals.llm_count += result.stats.llm_count;
        totals.retrieval_calls += result.stats.retrieval_calls;
        totals.fallback_batches += result.stats.fallback_batches;
    }
    write_text_file(args.out, body);

    json stats_doc{{"apks", results.size()},
                   {"corpus", totals.corpus_count},
                   {"cache", totals.cache_count},
                   {"llm", totals.llm_count},
                   {"retrieval_calls", totals.retrieval_calls},
                   {"fallback_batches", totals.fallback_batches}};
    std::string stats_path =
        !args.stats_path.empty() ? args.stats_path : args.out + ".stats.json";
    write_text_file(stats_path, stats_doc.dump(2) + "\n");
    log_event({{"stage", "describe"},
               {"apks", results.size()},
               {"out", args.out},
               {"stats", stats_path}});
}

// ---------------------------------------------------------------------------
// preprocess

void cmd_preprocess(const AppConfig& cfg, const PreprocessArgs& args) {
    const std::string& stopword_path = !args.stopwords.empty() ? args.stopwords
                                                               : cfg.stopwords_path;
    auto stopwords = dexter::StopwordList::load(stopword_path);

    std::string body;
    size_t line_number = 0;
    for (const auto& line : read_lines(args.in)) {
        ++line_number;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("apk_id") ||
            !doc.contains("description")) {
            throw dexter::Error(dexter::ErrorKind::MalformedRecord,
                                args.in + " line " + std::to_string(line_number) +
                                    ": expected apk_id and description fields");
        }
        Timer timer;
        auto text = dexter::preprocess(doc["apk_id"].get<std::string>(),
                                       doc["description"].get<std::string>(), stopwords);
        json out{{"apk_id", text.apk_id}, {"tokens", text.tokens}, {"joined", text.joined}};
        body += out.dump();
        body += '\n';
        log_event({{"stage", "preprocess"},
                   {"apk_id", text.apk_id},
                   {"ms", timer.ms()},
                   {"tokens", text.tokens.size()}});
    }
    write_text_file(args.out, body);
}

// ---------------------------------------------------------------------------
// split / train / eval / compare

void cmd_split(const AppConfig& cfg, const SplitArgs& args) {
    auto labels = dexter::load_labels_json(args.labels);
    uint64_t seed = args.seed_set ? args.seed : cfg.seed;
    auto split = dexter::stratified_split(labels, seed);

    std::filesystem::create_directories(args.out_dir);
    auto path = [&](const char* name) {
        return (std::filesystem::path(args.out_dir) / name).string();
    };
    dexter::write_labels_json(split.train, path("train.jsonl"));
    dexter::write_labels_json(split.validation, path("validation.jsonl"));
    dexter::write_labels_json(split.test, path("test.jsonl"));

    json summary{{"seed", seed},
                 {"train", split.train.size()},
                 {"validation", split.validation.size()},
                 {"test", split.test.size()}};
    write_text_file(path("split_summary.json"), summary.dump(2) + "\n");
    log_event({{"stage", "split"},
               {"seed", seed},
               {"train", split.train.size()},
               {"validation", split.validation.size()},
               {"test", split.test.size()}});
}

std::map<std::string, std::string> load_texts_by_id(const std::string& path) {
    std::map<std::string, std::string> texts;
    size_t line_number = 0;
    for (const auto& line : read_lines(path)) {
        ++line_number;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("apk_id") ||
            !doc.contains("joined")) {
            throw dexter::Error(dexter::ErrorKind::MalformedRecord,
                                path + " line " + std::to_string(line_number) +
                                    ": expected apk_id and joined fields");
        }
        texts[doc["apk_id"].get<std::string>()] = doc["joined"].get<std::string>();
    }
    return texts;
}

std::vector<dexter::TrainingText> join_texts(const std::vector<dexter::LabeledSample>& samples,
                                             const std::map<std::string, std::string>& texts) {
    std::vector<dexter::TrainingText> out;
    out.reserve(samples.size());
    for (const auto& sample : samples) {
        auto it = texts.find(sample.apk_id);
        if (it == texts.end()) {
            throw dexter::Error(dexter::ErrorKind::MalformedRecord,
                                "no preprocessed text for " + sample.apk_id);
        }
        out.push_back({sample.apk_id, it->second, sample.label});
    }
    return out;
}

void cmd_train(const AppConfig& cfg, const TrainArgs& args) {
    auto texts = load_texts_by_id(args.texts);
    auto partition = [&](const char* name) {
        return dexter::load_labels_json(
            (std::filesystem::path(args.split_dir) / name).string());
    };
    auto train_samples = partition("train.jsonl");
    auto val_samples = partition("validation.jsonl");

    auto train_texts = join_texts(train_samples, texts);
    auto val_texts = join_texts(val_samples, texts);
    auto weights = dexter::class_weights(train_samples);

    dexter::BaselineConfig model_cfg = cfg.baseline;
    if (args.seed_set) model_cfg.seed = args.seed;
    if (args.epochs_set) model_cfg.max_epochs = args.epochs;
    if (args.patience_set) model_cfg.patience = args.patience;
    if (args.learning_rate_set) model_cfg.learning_rate = args.learning_rate;

    Timer timer;
    auto result = dexter::train_baseline(train_texts, val_texts, weights, model_cfg);
    auto parent = std::filesystem::path(args.out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    result.model.save(args.out);

    json summary{{"epochs_run", result.epochs_run},
                 {"best_epoch", result.best_epoch},
                 {"train_losses", result.train_losses},
                 {"val_losses", result.val_losses},
                 {"class_weight_benign", weights.benign},
                 {"class_weight_malicious", weights.malicious},
                 {"seed", model_cfg.seed}};
    write_text_file(args.out + ".train.json", summary.dump(2) + "\n");
    log_event({{"stage", "train"},
               {"ms", timer.ms()},
               {"epochs_run", result.epochs_run},
               {"best_epoch", result.best_epoch},
               {"out", args.out}});
}

void cmd_eval(const AppConfig& cfg, const EvalArgs& args) {
    auto texts = load_texts_by_id(args.texts);
    auto test_samples = dexter::load_labels_json(
        (std::filesystem::path(args.split_dir) / "test.jsonl").string());
    auto test_texts = join_texts(test_samples, texts);

    std::string classifier = !args.classifier.empty() ? args.classifier : cfg.classifier_kind;

    std::vector<std::string> ids;
    std::vector<dexter::LabelPair> pairs;
    ids.reserve(test_texts.size());
    pairs.reserve(test_texts.size());

    Timer timer;
    if (classifier == "baseline") {
        auto model = dexter::BaselineModel::load(args.model);
        for (const auto& sample : test_texts) {
            ids.push_back(sample.apk_id);
            pairs.push_back({sample.label, model.predict(sample.text)});
        }
    } else if (classifier == "external") {
        dexter::ExternalEndpoint endpoint = cfg.external;
        if (!args.external_command.empty()) {
            endpoint.command = args.external_command;
            endpoint.host.clear();
        }
        if (!args.external_host.empty()) {
            endpoint.host = args.external_host;
            endpoint.port = args.external_port;
            endpoint.command.clear();
        }
        std::vector<dexter::ClassifyRequest> requests;
        requests.reserve(test_texts.size());
        for (const auto& sample : test_texts) {
            requests.push_back({sample.apk_id, sample.text});
        }
        auto responses = dexter::classify_external(requests, endpoint);
        for (size_t i = 0; i < responses.size(); ++i) {
            ids.push_back(responses[i].id);
            pairs.push_back({test_texts[i].label, responses[i].label});
        }
    } else {
        throw dexter::Error(dexter::ErrorKind::UsageError,
                            "--classifier must be baseline or external, got " + classifier);
    }

    auto report = dexter::compute_metrics(ids, pairs);
    write_text_file(args.out, dexter::metrics_to_json(report) + "\n");

    std::string confusion_path = args.confusion;
    if (confusion_path.empty()) {
        auto base = std::filesystem::path(args.out);
        confusion_path = (base.parent_path() / "confusion.csv").string();
    }
    write_text_file(confusion_path, dexter::confusion_to_csv(report.confusion));
    log_event({{"stage", "eval"},
               {"classifier", classifier},
               {"samples", pairs.size()},
               {"ms", timer.ms()},
               {"out", args.out},
               {"confusion", confusion_path}});
}

void cmd_compare(const CompareArgs& args) {
    auto read_report = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw dexter::Error(dexter::ErrorKind::IoError, "cannot open " + path);
        }
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        return dexter::metrics_from_json(content);
    };
    auto rows = dexter::compare_reports(read_report(args.a), read_report(args.b));
    std::cout << dexter::render_comparison(rows, args.name_a, args.name_b);
}

// ---------------------------------------------------------------------------
// cache stats

void cmd_cache_stats(const AppConfig& cfg, const std::string& cache_path) {
    const std::string& path = !cache_path.empty() ? cache_path : cfg.cache_path;
    dexter::DescriptionCache cache(path);
    json out{{"path", path}, {"entries", cache.size()}, {"corrupt_lines", cache.corrupt_lines()}};
    std::cout << out.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"APK static features to grounded descriptions and a benign/malicious "
                 "classification harness"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand("extract", "Extract static features from APK files");
    extract->add_option("inputs", extract_args.inputs, "APK files or directories")->required();
    extract->add_option("--out", extract_args.out, "Output features JSON Lines path")->required();
    auto* extract_workers =
        extract->add_option("--workers", extract_args.workers, "Parallel workers (default: number of processors)");

    LabelArgs label_args;
    auto* label = app.add_subcommand("label", "Label APKs from scan report files");
    label->add_option("--reports", label_args.reports_dir, "Directory of <sha256>.json scan reports")
        ->required();
    label->add_option("--out", label_args.out, "Output labels JSON Lines path")->required();

    std::string corpus_dir_arg;
    auto* corpus = app.add_subcommand("corpus", "Knowledge corpus utilities");
    corpus->require_subcommand(1);
    auto* corpus_validate = corpus->add_subcommand("validate", "Load the corpus and print stats");
    corpus_validate->add_option("--corpus", corpus_dir_arg, "Corpus directory");

    DescribeArgs describe_args;
    auto* describe = app.add_subcommand("describe", "Generate functional descriptions");
    describe->add_option("--features", describe_args.features_path, "Features JSON Lines path")
        ->required();
    describe->add_option("--out", describe_args.out, "Output descriptions JSON Lines path")
        ->required();
    describe->add_option("--mode", describe_args.mode, "agentic-rag or fusion")
        ->default_val("agentic-rag");
    describe->add_flag("--offline", describe_args.offline,
                       "Use the scripted mock transport; unscripted prompts fail");
    describe->add_option("--transcript", describe_args.transcript_path,
                         "Write a JSON Lines transcript of model exchanges");
    describe->add_option("--stats", describe_args.stats_path,
                         "Stats JSON path (default: <out>.stats.json)");
    describe->add_option("--cache", describe_args.cache_path, "Description cache JSONL path");
    describe->add_option("--mock-script", describe_args.mock_script,
                         "Mock transport script (with --offline)");
    describe->add_option("--fuzzy-threshold", describe_args.fuzzy_threshold,
                         "Fuzzy match threshold (default 0.65)");
    auto* describe_workers =
        describe->add_option("--workers", describe_args.workers, "Parallel workers");

    PreprocessArgs preprocess_args;
    auto* preprocess = app.add_subcommand("preprocess", "Clean, tokenize, destop, and stem descriptions");
    preprocess->add_option("--in", preprocess_args.in, "Descriptions JSON Lines path")->required();
    preprocess->add_option("--out", preprocess_args.out, "Output preprocessed JSON Lines path")
        ->required();
    preprocess->add_option("--stopwords", preprocess_args.stopwords, "Stopword list path");

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Stratified 70:10:20 train/validation/test split");
    split->add_option("--labels", split_args.labels, "Labels JSON Lines path")->required();
    split->add_option("--out-dir", split_args.out_dir, "Output directory for the partitions")
        ->required();
    auto* split_seed = split->add_option("--seed", split_args.seed, "Shuffle seed");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train the baseline description classifier");
    train->add_option("--texts", train_args.texts, "Preprocessed texts JSON Lines path")
        ->required();
    train->add_option("--split-dir", train_args.split_dir, "Directory written by split")
        ->required();
    train->add_option("--out", train_args.out, "Output model path")->required();
    auto* train_seed = train->add_option("--seed", train_args.seed, "Training seed");
    auto* train_epochs = train->add_option("--epochs", train_args.epochs, "Maximum epochs");
    auto* train_patience =
        train->add_option("--patience", train_args.patience, "Early stopping patience");
    auto* train_lr =
        train->add_option("--learning-rate", train_args.learning_rate, "SGD learning rate");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate a classifier on the test partition");
    eval->add_option("--texts", eval_args.texts, "Preprocessed texts JSON Lines path")->required();
    eval->add_option("--split-dir", eval_args.split_dir, "Directory written by split")->required();
    eval->add_option("--model", eval_args.model, "Baseline model path");
    eval->add_option("--out", eval_args.out, "Output metrics JSON path")->required();
    eval->add_option("--confusion", eval_args.confusion,
                     "Confusion matrix CSV path (default: confusion.csv next to --out)");
    eval->add_option("--classifier", eval_args.classifier, "baseline or external");
    eval->add_option("--external-command", eval_args.external_command,
                     "External classifier argv (repeatable, one element per use)");
    eval->add_option("--external-host", eval_args.external_host, "External classifier TCP host");
    eval->add_option("--external-port", eval_args.external_port, "External classifier TCP port");

    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Compare two metrics reports");
    compare->add_option("--a", compare_args.a, "First metrics JSON path")->required();
    compare->add_option("--b", compare_args.b, "Second metrics JSON path")->required();
    compare->add_option("--name-a", compare_args.name_a, "Display name for the first report");
    compare->add_option("--name-b", compare_args.name_b, "Display name for the second report");

    std::string cache_path_arg;
    auto* cache_cmd = app.add_subcommand("cache", "Description cache utilities");
    cache_cmd->require_subcommand(1);
    auto* cache_stats = cache_cmd->add_subcommand("stats", "Print cache entry counts");
    cache_stats->add_option("--cache", cache_path_arg, "Cache JSONL path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        AppConfig cfg = load_config(config_path);
        extract_args.workers_set = extract_workers->count() > 0;
        describe_args.workers_set = describe_workers->count() > 0;
        split_args.seed_set = split_seed->count() > 0;
        train_args.seed_set = train_seed->count() > 0;
        train_args.epochs_set = train_epochs->count() > 0;
        train_args.patience_set = train_patience->count() > 0;
        train_args.learning_rate_set = train_lr->count() > 0;

        if (extract->parsed()) {
            cmd_extract(cfg, extract_args);
        } else if (label->parsed()) {
            cmd_label(label_args);
        } else if (corpus->parsed() && corpus_validate->parsed()) {
            cmd_corpus_validate(cfg, corpus_dir_arg);
        } else if (describe->parsed()) {
            cmd_describe(cfg, describe_args);
        } else if (preprocess->parsed()) {
            cmd_preprocess(cfg, preprocess_args);
        } else if (split->parsed()) {
            cmd_split(cfg, split_args);
        } else if (train->parsed()) {
            cmd_train(cfg, train_args);
        } else if (eval->parsed()) {
            cmd_eval(cfg, eval_args);
        } else if (compare->parsed()) {
            cmd_compare(compare_args);
        } else if (cache_cmd->parsed() && cache_stats->parsed()) {
            cmd_cache_stats(cfg, cache_path_arg);
        }
        return 0;
    } catch (const dexter::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dexter::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
