#include <doctest.h>

#include <fstream>

#include "dexter/corpus.hpp"
#include "dexter/errors.hpp"
#include "temp_dir.hpp"

using namespace dexter;
using namespace dexter::testsupport;

namespace {

void write_minimal_corpus(const TempDir& dir) {
    std::ofstream(dir.str("permissions.csv"))
        << "name,description\n"
        << "android.permission.INTERNET,Opens network sockets.\n"
        << "android.permission.SEND_SMS,\"Sends SMS, possibly at a cost.\"\n";
    std::ofstream(dir.str("services.csv"))
        << "name,description\n"
        << "com.example.SyncService,\"He said \"\"sync\"\" and left.\"\n";
    std::ofstream(dir.str("receivers.csv")) << "name,description\n";
    std::ofstream(dir.str("intent_actions.csv"))
        << "name,description\n"
        << "android.intent.action.VIEW,Displays data.\n";
}

}  // namespace

TEST_CASE("csv parsing handles quotes, commas, embedded newlines") {
    auto rows = parse_csv("a,b\n\"x,y\",\"line1\nline2\"\n\"he said \"\"hi\"\"\",z\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b"});
    CHECK(rows[1] == std::vector<std::string>{"x,y", "line1\nline2"});
    CHECK(rows[2] == std::vector<std::string>{"he said \"hi\"", "z"});
}

TEST_CASE("corpus loads all four category files") {
    TempDir dir;
    write_minimal_corpus(dir);
    auto corpus = load_corpus(dir.str());
    CHECK(corpus.total() == 4);

    auto stats = corpus_stats(corpus);
    CHECK(stats[FeatureCategory::Permission] == 2);
    CHECK(stats[FeatureCategory::Service] == 1);
    CHECK(stats[FeatureCategory::Receiver] == 0);
    CHECK(stats[FeatureCategory::IntentAction] == 1);

    const auto* entry = corpus.find(FeatureCategory::Permission, "android.permission.SEND_SMS");
    REQUIRE(entry != nullptr);
    CHECK(entry->description == "Sends SMS, possibly at a cost.");

    const auto* quoted = corpus.find(FeatureCategory::Service, "com.example.SyncService");
    REQUIRE(quoted != nullptr);
    CHECK(quoted->description == "He said \"sync\" and left.");
}

TEST_CASE("corpus lookup is case insensitive") {
    TempDir dir;
    write_minimal_corpus(dir);
    auto corpus = load_corpus(dir.str());
    const auto* entry = corpus.find(FeatureCategory::Permission, "ANDROID.permission.internet");
    REQUIRE(entry != nullptr);
    CHECK(entry->name == "android.permission.INTERNET");
}

TEST_CASE("missing category file is a typed error") {
    TempDir dir;
    write_minimal_corpus(dir);
    std::filesystem::remove(dir.str("receivers.csv"));
    try {
        load_corpus(dir.str());
        FAIL("expected MissingCategoryFile");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingCategoryFile);
    }
}

TEST_CASE("duplicate entries are a typed error") {
    TempDir dir;
    write_minimal_corpus(dir);
    std::ofstream(dir.str("permissions.csv"))
        << "name,description\n"
        << "android.permission.X,first.\n"
        << "ANDROID.PERMISSION.x,second one differing only by case.\n";
    try {
        load_corpus(dir.str());
        FAIL("expected DuplicateEntry");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateEntry);
    }
}

TEST_CASE("empty description is a typed error") {
    TempDir dir;
    write_minimal_corpus(dir);
    std::ofstream(dir.str("services.csv")) << "name,description\ncom.example.S,\n";
    try {
        load_corpus(dir.str());
        FAIL("expected EmptyDescription");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDescription);
    }
}

TEST_CASE("the shipped corpus loads and is non-trivial") {
    auto corpus = load_corpus(std::string(DEXTER_DATA_DIR) + "/corpus");
    auto stats = corpus_stats(corpus);
    CHECK(stats[FeatureCategory::Permission] >= 20);
    CHECK(stats[FeatureCategory::Service] >= 10);
    CHECK(stats[FeatureCategory::Receiver] >= 8);
    CHECK(stats[FeatureCategory::IntentAction] >= 10);
}
