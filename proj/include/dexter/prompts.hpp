#pragma once

#include <map>
#include <string>

#include "dexter/features.hpp"

namespace dexter {

// A prompt template with {placeholder} slots. Rendering walks the template
// text once and substitutes every occurrence of each known placeholder;
// substituted values are never rescanned, so braces inside values stay
// literal.
class PromptTemplate {
public:
    static PromptTemplate load(const std::string& path);
    static PromptTemplate from_string(std::string text);

    // Throws Error(MissingPlaceholder) if the template names a placeholder
    // absent from `values`.
    std::string render(const std::map<std::string, std::string>& values) const;

    const std::string& text() const { return text_; }

private:
    std::string text_;
};

// The shipped template files, loaded from one directory.
struct TemplateSet {
    PromptTemplate agentic;    // final description prompt, statistics + grounded info
    PromptTemplate generator;  // single-model generation prompt, <INPUT> block
    PromptTemplate fusion;     // merge prompt taking two candidate descriptions
    PromptTemplate fallback;   // batch prompt for corpus-miss features
    std::string version;

    static TemplateSet load(const std::string& dir);
};

// Everything the agentic prompt needs.
struct PromptContext {
    std::string apk_name;
    size_t total_permissions = 0;
    size_t total_services = 0;
    size_t total_receivers = 0;
    size_t total_intents = 0;
    std::string formatted_info;
};

std::string render_agentic_prompt(const PromptContext& ctx, const PromptTemplate& tpl);
std::string render_generator_prompt(const std::string& formatted_info, const PromptTemplate& tpl);

// Throws Error(EmptyInputDescription) if either description is empty.
std::string render_fusion_prompt(const std::string& apk_name,
                                 const std::string& static_features_str,
                                 const std::string& description1,
                                 const std::string& description2, const PromptTemplate& tpl);

// Grounded per-feature block: category headings in the order Permissions,
// Services, Broadcast Receivers, Intent Actions, each feature rendered as
// "- name: description". Categories with no features are skipped.
std::string build_formatted_info(
    const StaticFeatureSet& features,
    const std::map<std::pair<FeatureCategory, std::string>, std::string>& descriptions);

// Raw feature block for the fusion mode: every category heading with its
// count, followed by "- name" lines. All four categories appear even when
// empty.
std::string build_static_features_str(const StaticFeatureSet& features);

}  // namespace dexter
