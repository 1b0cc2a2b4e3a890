#include "dexter/labeling.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

using nlohmann::json;

bool engine_flagged(const json& engine_entry) {
    if (!engine_entry.is_object()) return false;
    if (engine_entry.contains("detected") && engine_entry["detected"].is_boolean()) {
        return engine_entry["detected"].get<bool>();
    }
    if (engine_entry.contains("category") && engine_entry["category"].is_string()) {
        return engine_entry["category"].get<std::string>() == "malicious";
    }
    return false;
}

}  // namespace

const char* label_name(Label label) {
    return label == Label::Malicious ? "malicious" : "benign";
}

Label label_from_name(const std::string& name) {
    if (name == "malicious") return Label::Malicious;
    if (name == "benign") return Label::Benign;
    throw Error(ErrorKind::MalformedRecord, "unknown label '" + name + "'");
}

LabeledSample label_from_report(const ScanReport& report) {
    LabeledSample sample;
    sample.apk_id = report.sha256;
    sample.label = report.positives >= 1 ? Label::Malicious : Label::Benign;
    sample.source = LabelSource::ThresholdRule;
    return sample;
}

ScanReport parse_vt_report(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorKind::MissingField, "report is not a JSON object");
    }

    ScanReport report;
    if (doc.contains("sha256") && doc["sha256"].is_string()) {
        report.sha256 = doc["sha256"].get<std::string>();
    } else {
        throw Error(ErrorKind::MissingField, "sha256");
    }
    if (!is_hex64(report.sha256)) {
        throw Error(ErrorKind::InvalidHash, "sha256 is not 64 hex characters");
    }
    report.sha256 = ascii_fold(report.sha256);

    if (doc.contains("positives") && doc["positives"].is_number_integer()) {
        report.positives = doc["positives"].get<int>();
        if (doc.contains("total") && doc["total"].is_number_integer()) {
            report.total_engines = doc["total"].get<int>();
        } else {
            throw Error(ErrorKind::MissingField, "total");
        }
    } else if (doc.contains("scans") && doc["scans"].is_object()) {
        int flagged = 0;
        int total = 0;
        for (const auto& [engine, entry] : doc["scans"].items()) {
            (void)engine;
            ++total;
            if (engine_flagged(entry)) ++flagged;
        }
        report.positives = flagged;
        report.total_engines = total;
    } else {
        throw Error(ErrorKind::MissingField, "positives or scans");
    }

    if (report.total_engines <= 0 || report.positives < 0 ||
        report.positives > report.total_engines) {
        throw Error(ErrorKind::MissingField, "engine counts are inconsistent");
    }
    return report;
}

std::vector<LabeledSample> label_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorKind::IoError, dir + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<LabeledSample> labels;
    labels.reserve(files.size());
    for (const auto& path : files) {
        std::ifstream in(path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        ScanReport report = parse_vt_report(buffer.str());
        labels.push_back(label_from_report(report));
    }
    return labels;
}

void write_labels_json(const std::vector<LabeledSample>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path);
    }
    for (const auto& sample : labels) {
        json record;
        record["apk_id"] = sample.apk_id;
        record["label"] = label_name(sample.label);
        out << record.dump() << "\n";
    }
}

std::vector<LabeledSample> load_labels_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path);
    }
    std::vector<LabeledSample> labels;
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("apk_id") || !record.contains("label")) {
            throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_number));
        }
        LabeledSample sample;
        sample.apk_id = record["apk_id"].get<std::string>();
        sample.label = label_from_name(record["label"].get<std::string>());
        labels.push_back(std::move(sample));
    }
    return labels;
}

}  // namespace dexter
