#include <doctest.h>

#include <fstream>
#include <sstream>

#include "dexter/errors.hpp"
#include "dexter/textprep.hpp"

using namespace dexter;

namespace {

StopwordList shipped_stopwords() {
    return StopwordList::load(std::string(DEXTER_DATA_DIR) + "/stopwords_en.txt");
}

}  // namespace

TEST_CASE("clean keeps letters digits spaces apostrophes hyphens") {
    CHECK(clean("Hello, world! (42)") == "Hello world 42");
    CHECK(clean("it's a well-known fact") == "it's a well-known fact");
    CHECK(clean("  spaced   out\ttabs\nnewlines  ") == "spaced out tabs newlines");
    CHECK(clean("emoji \xF0\x9F\x98\x80 gone") == "emoji gone");
    CHECK(clean("@#$%") == "");
}

TEST_CASE("tokenize_lower lowercases and splits") {
    CHECK(tokenize_lower("The App Sends SMS") ==
          std::vector<std::string>{"the", "app", "sends", "sms"});
    CHECK(tokenize_lower("").empty());
}

TEST_CASE("stopword list carries its version and filters in order") {
    auto stopwords = shipped_stopwords();
    CHECK(stopwords.version == "stopwords-en-175 v1");
    CHECK(stopwords.words.size() == 175);
    CHECK(stopwords.contains("the"));
    CHECK(stopwords.contains("is"));
    CHECK(!stopwords.contains("app"));

    auto filtered = remove_stopwords({"the", "app", "is", "sending", "the", "messages"},
                                     stopwords);
    CHECK(filtered == std::vector<std::string>{"app", "sending", "messages"});
}

TEST_CASE("porter stemmer classic examples") {
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("ponies") == "poni");
    CHECK(porter_stem("caress") == "caress");
    CHECK(porter_stem("cats") == "cat");
    CHECK(porter_stem("feed") == "feed");
    CHECK(porter_stem("agreed") == "agre");
    CHECK(porter_stem("plastered") == "plaster");
    CHECK(porter_stem("motoring") == "motor");
    CHECK(porter_stem("sing") == "sing");
    CHECK(porter_stem("happy") == "happi");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("conditional") == "condit");
    CHECK(porter_stem("triplicate") == "triplic");
    CHECK(porter_stem("hopeful") == "hope");
    CHECK(porter_stem("generalization") == "gener");
    CHECK(porter_stem("probate") == "probat");
    CHECK(porter_stem("controller") == "control");
    CHECK(porter_stem("roll") == "roll");
}

TEST_CASE("short tokens and non-letter tokens pass through") {
    CHECK(porter_stem("a") == "a");
    CHECK(porter_stem("is") == "is");
    CHECK(porter_stem("sms2") == "sms2");
    CHECK(porter_stem("it's") == "it's");
    CHECK(porter_stem("well-known") == "well-known");
}

TEST_CASE("porter stemmer matches the reference vocabulary") {
    std::ifstream in(std::string(DEXTER_FIXTURES_DIR) + "/porter_vocab.tsv");
    REQUIRE(in.good());
    std::string line;
    size_t checked = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        std::string word = line.substr(0, tab);
        std::string expected = line.substr(tab + 1);
        CAPTURE(word);
        REQUIRE(porter_stem(word) == expected);
        ++checked;
    }
    CHECK(checked >= 400);
}

TEST_CASE("the worked sentence example") {
    auto stopwords = shipped_stopwords();
    auto result = preprocess("apk1", "The app is sending the messages.", stopwords);
    CHECK(result.apk_id == "apk1");
    CHECK(result.tokens == std::vector<std::string>{"app", "send", "messag"});
    CHECK(result.joined == "app send messag");
}

TEST_CASE("stopwords are removed before stemming") {
    auto stopwords = shipped_stopwords();
    // "being" is a stopword and must be dropped as-is; if stemming ran
    // first it would become "be" and slip through.
    auto result = preprocess("apk2", "The service is being started.", stopwords);
    for (const auto& token : result.tokens) {
        CHECK(token != "be");
        CHECK(token != "being");
    }
    CHECK(result.joined.find("servic") != std::string::npos);
    CHECK(result.joined.find("start") != std::string::npos);
}

TEST_CASE("text reduced to nothing is a typed error") {
    auto stopwords = shipped_stopwords();
    try {
        preprocess("apk3", "The is a of and.", stopwords);
        FAIL("expected EmptyAfterPreprocessing");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyAfterPreprocessing);
    }
    CHECK_THROWS_AS(preprocess("apk4", "!!!", stopwords), Error);
}
