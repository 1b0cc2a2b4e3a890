#include "dexter/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <utility>

#include <nlohmann/json.hpp>

#include "dexter/errors.hpp"
#include "dexter/rng.hpp"
#include "dexter/sha256.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

using nlohmann::json;

constexpr double kRatioTrain = 0.70;
constexpr double kRatioVal = 0.10;

uint64_t fnv1a64(const std::string& data) {
    uint64_t hash = 0xCBF29CE484222325ull;
    for (char c : data) {
        hash ^= static_cast<uint8_t>(c);
        hash *= 0x100000001B3ull;
    }
    return hash;
}

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

// Clamped log loss so a saturated prediction cannot produce infinity.
double log_loss(double p, bool positive) {
    constexpr double kEps = 1e-12;
    p = std::min(1.0 - kEps, std::max(kEps, p));
    return positive ? -std::log(p) : -std::log(1.0 - p);
}

// Signed hashed bag-of-words: token hash picks the bucket, its top bit the
// sign.
void add_features(const std::string& text, size_t dimension,
                  std::vector<std::pair<size_t, double>>& out) {
    out.clear();
    size_t begin = 0;
    auto flush = [&](size_t end) {
        if (end > begin) {
            uint64_t hash = fnv1a64(text.substr(begin, end - begin));
            double sign = (hash >> 63) ? -1.0 : 1.0;
            out.emplace_back(static_cast<size_t>(hash % dimension), sign);
        }
    };
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] == ' ') {
            flush(i);
            begin = i + 1;
        }
    }
    flush(text.size());
}

double model_margin(const std::vector<float>& weights, double bias,
                    const std::vector<std::pair<size_t, double>>& features) {
    double z = bias;
    for (const auto& [index, value] : features) {
        z += static_cast<double>(weights[index]) * value;
    }
    return z;
}

double dataset_loss(const std::vector<TrainingText>& samples, const ClassWeights& weights,
                    const std::vector<float>& model_weights, double bias, size_t dimension) {
    if (samples.empty()) return 0.0;
    std::vector<std::pair<size_t, double>> features;
    double total = 0.0;
    double weight_sum = 0.0;
    for (const auto& sample : samples) {
        add_features(sample.text, dimension, features);
        double p = sigmoid(model_margin(model_weights, bias, features));
        double w = weights.of(sample.label);
        total += w * log_loss(p, sample.label == Label::Malicious);
        weight_sum += w;
    }
    return total / weight_sum;
}

}  // namespace

DatasetSplit stratified_split(const std::vector<LabeledSample>& samples, uint64_t seed) {
    std::vector<LabeledSample> benign;
    std::vector<LabeledSample> malicious;
    for (const auto& sample : samples) {
        (sample.label == Label::Malicious ? malicious : benign).push_back(sample);
    }
    if (benign.size() < 10 || malicious.size() < 10) {
        throw Error(ErrorKind::TooFewSamples, "need at least 10 samples per class, have " +
                                                  std::to_string(benign.size()) + " benign / " +
                                                  std::to_string(malicious.size()) + " malicious");
    }

    DatasetSplit split;
    split.seed = seed;
    Rng rng(seed);
    for (auto* bucket : {&benign, &malicious}) {
        rng.shuffle(*bucket);
        size_t n = bucket->size();
        size_t n_train = static_cast<size_t>(kRatioTrain * static_cast<double>(n));
        size_t n_val = static_cast<size_t>(kRatioVal * static_cast<double>(n));
        size_t n_test = static_cast<size_t>((1.0 - kRatioTrain - kRatioVal) * static_cast<double>(n));
        size_t remainder = n - n_train - n_val - n_test;
        // Leftover samples go to train, then validation, then test.
        if (remainder > 0) { ++n_train; --remainder; }
        if (remainder > 0) { ++n_val; --remainder; }
        if (remainder > 0) { ++n_test; --remainder; }

        size_t i = 0;
        for (size_t k = 0; k < n_train; ++k) split.train.push_back((*bucket)[i++]);
        for (size_t k = 0; k < n_val; ++k) split.validation.push_back((*bucket)[i++]);
        for (size_t k = 0; k < n_test; ++k) split.test.push_back((*bucket)[i++]);
    }
    return split;
}

ClassWeights class_weights(const std::vector<LabeledSample>& samples) {
    size_t benign = 0;
    size_t malicious = 0;
    for (const auto& sample : samples) {
        (sample.label == Label::Malicious ? malicious : benign) += 1;
    }
    if (benign == 0 || malicious == 0) {
        throw Error(ErrorKind::MissingClass,
                    benign == 0 ? "no benign samples" : "no malicious samples");
    }
    double n = static_cast<double>(samples.size());
    ClassWeights weights;
    weights.benign = n / (2.0 * static_cast<double>(benign));
    weights.malicious = n / (2.0 * static_cast<double>(malicious));
    return weights;
}

std::vector<size_t> weighted_sampler(const std::vector<LabeledSample>& train,
                                     const ClassWeights& weights, uint64_t seed,
                                     size_t epoch_len) {
    std::vector<double> prefix(train.size());
    double total = 0.0;
    for (size_t i = 0; i < train.size(); ++i) {
        total += weights.of(train[i].label);
        prefix[i] = total;
    }

    Rng rng(seed);
    std::vector<size_t> indices;
    indices.reserve(epoch_len);
    for (size_t k = 0; k < epoch_len; ++k) {
        double target = rng.next_double() * total;
        auto it = std::upper_bound(prefix.begin(), prefix.end(), target);
        size_t index = static_cast<size_t>(it - prefix.begin());
        if (index >= train.size()) index = train.size() - 1;
        indices.push_back(index);
    }
    return indices;
}

double BaselineModel::score(const std::string& text) const {
    std::vector<std::pair<size_t, double>> features;
    add_features(text, dimension, features);
    return sigmoid(model_margin(weights, bias, features));
}

Label BaselineModel::predict(const std::string& text) const {
    return score(text) >= 0.5 ? Label::Malicious : Label::Benign;
}

void BaselineModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write model to " + path);
    }
    json header;
    header["dimension"] = dimension;
    header["bias"] = bias;
    header["learning_rate"] = config.learning_rate;
    header["seed"] = config.seed;
    out << header.dump() << "\n";
    // Weights as one line of space-separated hex floats keeps the file
    // reloadable without precision loss.
    for (size_t i = 0; i < weights.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%a", static_cast<double>(weights[i]));
        out << buf << (i + 1 < weights.size() ? ' ' : '\n');
    }
}

BaselineModel BaselineModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open model " + path);
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw Error(ErrorKind::MalformedRecord, "model file is empty");
    }
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.contains("dimension")) {
        throw Error(ErrorKind::MalformedRecord, "bad model header");
    }
    BaselineModel model;
    model.dimension = header["dimension"].get<size_t>();
    model.bias = header.value("bias", 0.0);
    model.config.learning_rate = header.value("learning_rate", 0.1);
    model.config.seed = header.value("seed", uint64_t{1});
    model.weights.assign(model.dimension, 0.0f);
    for (size_t i = 0; i < model.dimension; ++i) {
        std::string token;
        if (!(in >> token)) {
            throw Error(ErrorKind::MalformedRecord, "model weight vector truncated");
        }
        model.weights[i] = static_cast<float>(std::strtod(token.c_str(), nullptr));
    }
    return model;
}

TrainResult train_baseline(const std::vector<TrainingText>& train,
                           const std::vector<TrainingText>& validation,
                           const ClassWeights& weights, const BaselineConfig& config) {
    if (train.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "no training texts");
    }

    TrainResult result;
    result.model.dimension = config.dimension;
    result.model.config = config;
    result.model.weights.assign(config.dimension, 0.0f);
    result.model.bias = 0.0;

    std::vector<LabeledSample> train_labels;
    train_labels.reserve(train.size());
    for (const auto& sample : train) {
        train_labels.push_back({sample.apk_id, sample.label, LabelSource::Manual});
    }

    std::vector<float> best_weights = result.model.weights;
    double best_bias = 0.0;
    double best_loss = std::numeric_limits<double>::infinity();
    size_t best_epoch = 0;
    size_t epochs_without_improvement = 0;

    std::vector<std::pair<size_t, double>> features;
    for (size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        auto order = weighted_sampler(train_labels, weights, config.seed + epoch, train.size());
        for (size_t index : order) {
            const TrainingText& sample = train[index];
            add_features(sample.text, config.dimension, features);
            double p = sigmoid(model_margin(result.model.weights, result.model.bias, features));
            double y = sample.label == Label::Malicious ? 1.0 : 0.0;
            double gradient = weights.of(sample.label) * (p - y);
            double step = config.learning_rate * gradient;
            for (const auto& [fi, fv] : features) {
                result.model.weights[fi] -= static_cast<float>(step * fv);
            }
            result.model.bias -= step;
        }

        result.train_losses.push_back(dataset_loss(train, weights, result.model.weights,
                                                   result.model.bias, config.dimension));
        double val_loss = dataset_loss(validation, weights, result.model.weights,
                                       result.model.bias, config.dimension);
        result.val_losses.push_back(val_loss);
        ++result.epochs_run;

        if (val_loss < best_loss) {
            best_loss = val_loss;
            best_weights = result.model.weights;
            best_bias = result.model.bias;
            best_epoch = epoch;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement > config.patience) {
                break;
            }
        }
    }

    result.model.weights = std::move(best_weights);
    result.model.bias = best_bias;
    result.best_epoch = best_epoch;
    return result;
}

MetricsReport compute_metrics(const std::vector<LabelPair>& pairs) {
    return compute_metrics(std::vector<std::string>(), pairs);
}

MetricsReport compute_metrics(const std::vector<std::string>& ids,
                              const std::vector<LabelPair>& pairs) {
    if (pairs.empty()) {
        throw Error(ErrorKind::UndefinedMetric, "no label pairs to evaluate");
    }
    MetricsReport report;
    for (const auto& pair : pairs) {
        bool actual_positive = pair.truth == Label::Malicious;
        bool predicted_positive = pair.predicted == Label::Malicious;
        if (actual_positive && predicted_positive) ++report.confusion.tp;
        else if (!actual_positive && !predicted_positive) ++report.confusion.tn;
        else if (!actual_positive && predicted_positive) ++report.confusion.fp;
        else ++report.confusion.fn;
    }
    const auto& m = report.confusion;
    report.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    if (m.tp + m.fp > 0) {
        report.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    }
    if (m.tp + m.fn > 0) {
        report.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    }
    if (report.precision && report.recall && (*report.precision + *report.recall) > 0.0) {
        report.f1 = 2.0 * *report.precision * *report.recall /
                    (*report.precision + *report.recall);
    }

    if (!ids.empty()) {
        std::vector<std::string> sorted_ids = ids;
        std::sort(sorted_ids.begin(), sorted_ids.end());
        report.partition_hash = sha256_hex(join(sorted_ids, "\n"));
    }
    return report;
}

namespace {

json metric_to_json(const std::optional<double>& value) {
    if (!value) return json("undefined");
    return json(*value);
}

std::optional<double> metric_from_json(const json& value) {
    if (value.is_number()) return value.get<double>();
    return std::nullopt;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
    json doc;
    doc["accuracy"] = metric_to_json(report.accuracy);
    doc["precision"] = metric_to_json(report.precision);
    doc["recall"] = metric_to_json(report.recall);
    doc["f1"] = metric_to_json(report.f1);
    doc["confusion"] = {{"tp", report.confusion.tp},
                        {"tn", report.confusion.tn},
                        {"fp", report.confusion.fp},
                        {"fn", report.confusion.fn}};
    doc["samples"] = report.confusion.total();
    if (!report.partition_hash.empty()) {
        doc["partition_hash"] = report.partition_hash;
    }
    return doc.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("confusion")) {
        throw Error(ErrorKind::MalformedRecord, "bad metrics report");
    }
    MetricsReport report;
    report.accuracy = metric_from_json(doc.value("accuracy", json()));
    report.precision = metric_from_json(doc.value("precision", json()));
    report.recall = metric_from_json(doc.value("recall", json()));
    report.f1 = metric_from_json(doc.value("f1", json()));
    report.confusion.tp = doc["confusion"].value("tp", uint64_t{0});
    report.confusion.tn = doc["confusion"].value("tn", uint64_t{0});
    report.confusion.fp = doc["confusion"].value("fp", uint64_t{0});
    report.confusion.fn = doc["confusion"].value("fn", uint64_t{0});
    report.partition_hash = doc.value("partition_hash", "");
    return report;
}

std::string confusion_to_csv(const ConfusionMatrix& matrix) {
    std::string out;
    out += ",predicted_malicious,predicted_benign\n";
    out += "actual_malicious," + std::to_string(matrix.tp) + "," + std::to_string(matrix.fn) + "\n";
    out += "actual_benign," + std::to_string(matrix.fp) + "," + std::to_string(matrix.tn) + "\n";
    return out;
}

std::vector<ComparisonRow> compare_reports(const MetricsReport& a, const MetricsReport& b) {
    if (!a.partition_hash.empty() && !b.partition_hash.empty() &&
        a.partition_hash != b.partition_hash) {
        throw Error(ErrorKind::PartitionMismatch, "reports cover different test sets");
    }
    if (a.confusion.total() != b.confusion.total() && a.confusion.total() != 0 &&
        b.confusion.total() != 0) {
        throw Error(ErrorKind::PartitionMismatch,
                    "reports cover different sample counts (" +
                        std::to_string(a.confusion.total()) + " vs " +
                        std::to_string(b.confusion.total()) + ")");
    }

    auto row = [](const char* name, const std::optional<double>& va,
                  const std::optional<double>& vb) {
        ComparisonRow r;
        r.metric = name;
        r.a = va;
        r.b = vb;
        if (va && vb) {
            r.delta_points = (*va - *vb) * 100.0;
        }
        return r;
    };
    return {
        row("accuracy", a.accuracy, b.accuracy),
        row("precision", a.precision, b.precision),
        row("recall", a.recall, b.recall),
        row("f1", a.f1, b.f1),
    };
}

std::string render_comparison(const std::vector<ComparisonRow>& rows, const std::string& name_a,
                              const std::string& name_b) {
    auto cell = [](const std::optional<double>& value) -> std::string {
        if (!value) return "undefined";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", *value * 100.0);
        return buf;
    };
    auto delta_cell = [](const std::optional<double>& delta) -> std::string {
        if (!delta) return "n/a";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%+.2f", *delta);
        return buf;
    };

    size_t width_metric = std::string("metric").size();
    size_t width_a = name_a.size();
    size_t width_b = name_b.size();
    size_t width_delta = std::string("delta").size();
    for (const auto& row : rows) {
        width_metric = std::max(width_metric, row.metric.size());
        width_a = std::max(width_a, cell(row.a).size());
        width_b = std::max(width_b, cell(row.b).size());
        width_delta = std::max(width_delta, delta_cell(row.delta_points).size());
    }

    auto pad_left = [](const std::string& text, size_t width) {
        return std::string(width - text.size(), ' ') + text;
    };
    auto pad_right = [](const std::string& text, size_t width) {
        return text + std::string(width - text.size(), ' ');
    };

    std::string out;
    out += pad_right("metric", width_metric) + "  " + pad_left(name_a, width_a) + "  " +
           pad_left(name_b, width_b) + "  " + pad_left("delta", width_delta) + "\n";
    for (const auto& row : rows) {
        out += pad_right(row.metric, width_metric) + "  " + pad_left(cell(row.a), width_a) + "  " +
               pad_left(cell(row.b), width_b) + "  " +
               pad_left(delta_cell(row.delta_points), width_delta) + "\n";
    }
    return out;
}

}  // namespace dexter
