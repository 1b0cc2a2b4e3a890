#pragma once

#include <string>
#include <vector>

namespace dexter {

// One scan report from an antivirus aggregator.
struct ScanReport {
    std::string sha256;
    int positives = 0;
    int total_engines = 0;
};

enum class Label { Benign, Malicious };
enum class LabelSource { ThresholdRule, Manual };

const char* label_name(Label label);
Label label_from_name(const std::string& name);

struct LabeledSample {
    std::string apk_id;
    Label label = Label::Benign;
    LabelSource source = LabelSource::ThresholdRule;
};

// Threshold rule: one flagging engine is enough to call the sample malicious.
LabeledSample label_from_report(const ScanReport& report);

// Accepts a flat {"sha256","positives","total"} layout or a per-engine
// results map where each engine entry carries a detection verdict
// (a `detected` boolean or a `category` field equal to "malicious").
// Throws Error(MissingField) / Error(InvalidHash).
ScanReport parse_vt_report(const std::string& json_text);

// Labels every `<sha256>.json` report in a directory. Files that fail to
// parse are reported by the caller; this throws on the first bad file.
std::vector<LabeledSample> label_directory(const std::string& dir);

void write_labels_json(const std::vector<LabeledSample>& labels, const std::string& path);
std::vector<LabeledSample> load_labels_json(const std::string& path);

}  // namespace dexter
