#include "dexter/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

struct CategoryFile {
    FeatureCategory category;
    const char* filename;
};

constexpr CategoryFile kCategoryFiles[] = {
    {FeatureCategory::Permission, "permissions.csv"},
    {FeatureCategory::Service, "services.csv"},
    {FeatureCategory::Receiver, "receivers.csv"},
    {FeatureCategory::IntentAction, "intent_actions.csv"},
};

}  // namespace

void KnowledgeCorpus::add(CorpusEntry entry) {
    size_t cat = index_of(entry.category);
    std::string key = ascii_fold(entry.name);
    auto [it, inserted] = lookup_[cat].emplace(std::move(key), entries_[cat].size());
    if (!inserted) {
        throw Error(ErrorKind::DuplicateEntry,
                    std::string(category_name(entry.category)) + " '" + entry.name + "'");
    }
    entries_[cat].push_back(std::move(entry));
}

const std::vector<CorpusEntry>& KnowledgeCorpus::entries(FeatureCategory category) const {
    return entries_[index_of(category)];
}

const CorpusEntry* KnowledgeCorpus::find(FeatureCategory category, const std::string& name) const {
    size_t cat = index_of(category);
    auto it = lookup_[cat].find(ascii_fold(name));
    if (it == lookup_[cat].end()) return nullptr;
    return &entries_[cat][it->second];
}

size_t KnowledgeCorpus::total() const {
    size_t sum = 0;
    for (const auto& list : entries_) sum += list.size();
    return sum;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            // Tolerate CRLF line endings.
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (field_started || !row.empty() || !field.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_row();
    }
    return rows;
}

KnowledgeCorpus load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    KnowledgeCorpus corpus;
    for (const auto& file : kCategoryFiles) {
        fs::path path = fs::path(dir) / file.filename;
        if (!fs::is_regular_file(path)) {
            throw Error(ErrorKind::MissingCategoryFile, path.string());
        }
        std::ifstream in(path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        auto rows = parse_csv(buffer.str());
        if (rows.empty() || rows[0].size() < 2 || trim(rows[0][0]) != "name" ||
            trim(rows[0][1]) != "description") {
            throw Error(ErrorKind::MalformedRecord,
                        path.string() + ": expected header 'name,description'");
        }
        for (size_t r = 1; r < rows.size(); ++r) {
            const auto& cells = rows[r];
            if (cells.size() == 1 && trim(cells[0]).empty()) continue;
            if (cells.size() < 2) {
                throw Error(ErrorKind::MalformedRecord,
                            path.string() + " row " + std::to_string(r + 1) + ": too few cells");
            }
            CorpusEntry entry;
            entry.category = file.category;
            entry.name = normalize_feature(cells[0]);
            entry.description = trim(cells[1]);
            if (entry.description.empty()) {
                throw Error(ErrorKind::EmptyDescription,
                            path.string() + " row " + std::to_string(r + 1));
            }
            corpus.add(std::move(entry));
        }
    }
    return corpus;
}

std::map<FeatureCategory, size_t> corpus_stats(const KnowledgeCorpus& corpus) {
    std::map<FeatureCategory, size_t> stats;
    for (FeatureCategory c : {FeatureCategory::Permission, FeatureCategory::Service,
                              FeatureCategory::Receiver, FeatureCategory::IntentAction}) {
        stats[c] = corpus.entries(c).size();
    }
    return stats;
}

}  // namespace dexter
