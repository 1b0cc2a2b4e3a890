#include "dexter/prompts.hpp"

#include <fstream>
#include <sstream>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

PromptTemplate PromptTemplate::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open template " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

PromptTemplate PromptTemplate::from_string(std::string text) {
    PromptTemplate tpl;
    tpl.text_ = std::move(text);
    return tpl;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(text_.size());
    size_t i = 0;
    while (i < text_.size()) {
        char c = text_[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        size_t j = i + 1;
        while (j < text_.size() && is_placeholder_char(text_[j])) ++j;
        if (j > i + 1 && j < text_.size() && text_[j] == '}') {
            std::string name = text_.substr(i + 1, j - i - 1);
            auto it = values.find(name);
            if (it == values.end()) {
                throw Error(ErrorKind::MissingPlaceholder, name);
            }
            out.append(it->second);
            i = j + 1;
        } else {
            // A brace that does not open a well-formed placeholder is
            // literal text.
            out.push_back(c);
            ++i;
        }
    }
    return out;
}

TemplateSet TemplateSet::load(const std::string& dir) {
    TemplateSet set;
    set.agentic = PromptTemplate::load(dir + "/agentic.txt");
    set.generator = PromptTemplate::load(dir + "/generator.txt");
    set.fusion = PromptTemplate::load(dir + "/fusion.txt");
    set.fallback = PromptTemplate::load(dir + "/fallback.txt");
    std::ifstream version_in(dir + "/VERSION");
    if (version_in) {
        std::getline(version_in, set.version);
        set.version = trim(set.version);
    }
    return set;
}

std::string render_agentic_prompt(const PromptContext& ctx, const PromptTemplate& tpl) {
    std::map<std::string, std::string> values;
    values["apk_name"] = ctx.apk_name;
    values["total_permissions"] = std::to_string(ctx.total_permissions);
    values["total_services"] = std::to_string(ctx.total_services);
    values["total_receivers"] = std::to_string(ctx.total_receivers);
    values["total_intents"] = std::to_string(ctx.total_intents);
    values["formatted_info"] = ctx.formatted_info;
    return tpl.render(values);
}

std::string render_generator_prompt(const std::string& formatted_info, const PromptTemplate& tpl) {
    return tpl.render({{"formatted_info", formatted_info}});
}

std::string render_fusion_prompt(const std::string& apk_name,
                                 const std::string& static_features_str,
                                 const std::string& description1,
                                 const std::string& description2, const PromptTemplate& tpl) {
    if (description1.empty() || description2.empty()) {
        throw Error(ErrorKind::EmptyInputDescription,
                    description1.empty() ? "description1" : "description2");
    }
    return tpl.render({{"apk_name", apk_name},
                       {"static_features_str", static_features_str},
                       {"description1", description1},
                       {"description2", description2}});
}

namespace {

struct CategoryBlock {
    FeatureCategory category;
    const char* heading;
};

constexpr CategoryBlock kBlocks[] = {
    {FeatureCategory::Permission, "Permissions"},
    {FeatureCategory::Service, "Services"},
    {FeatureCategory::Receiver, "Broadcast Receivers"},
    {FeatureCategory::IntentAction, "Intent Actions"},
};

}  // namespace

std::string build_formatted_info(
    const StaticFeatureSet& features,
    const std::map<std::pair<FeatureCategory, std::string>, std::string>& descriptions) {
    std::string out;
    for (const auto& block : kBlocks) {
        const auto& names = features.category(block.category);
        if (names.empty()) continue;
        out.append(block.heading);
        out.append(":\n");
        for (const auto& name : names) {
            out.append("- ");
            out.append(name);
            auto it = descriptions.find({block.category, name});
            if (it != descriptions.end() && !it->second.empty()) {
                out.append(": ");
                out.append(it->second);
            }
            out.push_back('\n');
        }
    }
    // No trailing newline: the block drops into the middle of a sentence
    // in the agentic template.
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::string build_static_features_str(const StaticFeatureSet& features) {
    std::string out;
    for (const auto& block : kBlocks) {
        const auto& names = features.category(block.category);
        if (!out.empty()) out.push_back('\n');
        out.append(block.heading);
        out.append(" (");
        out.append(std::to_string(names.size()));
        out.append("):");
        for (const auto& name : names) {
            out.append("\n- ");
            out.append(name);
        }
    }
    return out;
}

}  // namespace dexter
