#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dexter/labeling.hpp"

namespace dexter {

struct DatasetSplit {
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> validation;
    std::vector<LabeledSample> test;
    uint64_t seed = 0;
};

// Per-class shuffle with the seed, then 70:10:20 cuts inside each class;
// floor rounding with leftovers handed to train, then validation, then
// test. Throws Error(TooFewSamples) if either class has fewer than 10.
DatasetSplit stratified_split(const std::vector<LabeledSample>& samples, uint64_t seed);

struct ClassWeights {
    double benign = 1.0;
    double malicious = 1.0;

    double of(Label label) const { return label == Label::Malicious ? malicious : benign; }
};

// weight_c = N_total / (num_classes * N_c). Throws Error(MissingClass)
// when a class has no samples.
ClassWeights class_weights(const std::vector<LabeledSample>& samples);

// Sampling with replacement, P(i) proportional to the weight of i's class;
// deterministic for a given seed.
std::vector<size_t> weighted_sampler(const std::vector<LabeledSample>& train,
                                     const ClassWeights& weights, uint64_t seed,
                                     size_t epoch_len);

struct TrainingText {
    std::string apk_id;
    std::string text;  // preprocessed joined tokens
    Label label = Label::Benign;
};

struct BaselineConfig {
    size_t dimension = size_t{1} << 18;
    double learning_rate = 0.1;
    size_t max_epochs = 50;
    size_t patience = 3;
    uint64_t seed = 1;
};

// Logistic regression over a signed hashed bag-of-words.
struct BaselineModel {
    size_t dimension = 0;
    std::vector<float> weights;
    double bias = 0.0;
    BaselineConfig config;

    // P(malicious | text).
    double score(const std::string& text) const;
    Label predict(const std::string& text) const;

    void save(const std::string& path) const;
    static BaselineModel load(const std::string& path);
};

struct TrainResult {
    BaselineModel model;
    size_t epochs_run = 0;
    size_t best_epoch = 0;  // 0-based
    std::vector<double> train_losses;
    std::vector<double> val_losses;
};

// Class-weighted log loss minimized by per-sample SGD over a weighted
// sample stream; validation loss gates early stopping (strict improvement,
// `patience` grace epochs) and the best epoch's parameters are restored.
// Throws Error(EmptyTrainingSet).
TrainResult train_baseline(const std::vector<TrainingText>& train,
                           const std::vector<TrainingText>& validation,
                           const ClassWeights& weights, const BaselineConfig& config);

struct ConfusionMatrix {
    uint64_t tp = 0;  // malicious predicted malicious
    uint64_t tn = 0;
    uint64_t fp = 0;  // benign predicted malicious
    uint64_t fn = 0;

    uint64_t total() const { return tp + tn + fp + fn; }
};

// Metrics with explicit undefined states: a metric whose denominator is
// zero is reported as absent rather than silently 0.
struct MetricsReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    ConfusionMatrix confusion;
    // SHA-256 over the sorted evaluated ids; empty when ids were not
    // supplied. Lets compare_reports reject reports from different
    // partitions.
    std::string partition_hash;
};

struct LabelPair {
    Label truth;
    Label predicted;
};

// Malicious is the positive class. A = (TP+TN)/N, P = TP/(TP+FP),
// R = TP/(TP+FN), F1 = 2PR/(P+R). Throws Error(UndefinedMetric) only for
// an empty input; per-metric zero denominators surface as absent values.
MetricsReport compute_metrics(const std::vector<LabelPair>& pairs);

// Same, with sample ids recorded into partition_hash.
MetricsReport compute_metrics(const std::vector<std::string>& ids,
                              const std::vector<LabelPair>& pairs);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);
std::string confusion_to_csv(const ConfusionMatrix& matrix);

struct ComparisonRow {
    std::string metric;
    std::optional<double> a;
    std::optional<double> b;
    std::optional<double> delta_points;  // (a-b) in percentage points
};

// Per-metric deltas in percentage points. Throws Error(PartitionMismatch)
// when both reports carry partition hashes and they differ, or when the
// sample counts differ.
std::vector<ComparisonRow> compare_reports(const MetricsReport& a, const MetricsReport& b);

// Aligned plain-text table of a comparison, percentages with two decimals
// and signed deltas.
std::string render_comparison(const std::vector<ComparisonRow>& rows,
                              const std::string& name_a, const std::string& name_b);

}  // namespace dexter
