#include <doctest.h>

#include <fstream>

#include "axml_builder.hpp"
#include "dexter/apk.hpp"
#include "dexter/axml.hpp"
#include "dexter/errors.hpp"
#include "dexter/features.hpp"
#include "dexter/strings.hpp"
#include "fixture_apks.hpp"
#include "temp_dir.hpp"

using namespace dexter;
using namespace dexter::testsupport;

namespace {

ManifestDocument parse_tree(const XmlNode& root) {
    return parse_axml(encode_axml(root, PoolEncoding::Utf8));
}

}  // namespace

TEST_CASE("normalize_feature strips whitespace and quotes, keeps case") {
    CHECK(normalize_feature("  android.permission.SEND_SMS  ") ==
          "android.permission.SEND_SMS");
    CHECK(normalize_feature("\"com.example.Svc\"") == "com.example.Svc");
    CHECK(normalize_feature("com .example. Svc") == "com.example.Svc");
    CHECK(normalize_feature("MixedCase.Name") == "MixedCase.Name");
    CHECK_THROWS_AS(normalize_feature("   "), Error);
}

TEST_CASE("extract_features collects all four categories") {
    XmlNode perm{"uses-permission", {XmlAttr::str("name", "android.permission.INTERNET")}, {}};
    XmlNode action{"action", {XmlAttr::str("name", "android.intent.action.BOOT_COMPLETED")}, {}};
    XmlNode filter{"intent-filter", {}, {action}};
    XmlNode receiver{"receiver", {XmlAttr::str("name", "com.example.BootReceiver")}, {filter}};
    XmlNode service{"service", {XmlAttr::str("name", "com.example.SyncService")}, {}};
    XmlNode app{"application", {}, {service, receiver}};
    XmlNode manifest{"manifest", {XmlAttr{"", "package", "com.example", 0x03, 0}}, {perm, app}};

    auto features = extract_features(parse_tree(manifest), "id1");
    CHECK(features.apk_id == "id1");
    CHECK(features.permissions == std::vector<std::string>{"android.permission.INTERNET"});
    CHECK(features.services == std::vector<std::string>{"com.example.SyncService"});
    CHECK(features.receivers == std::vector<std::string>{"com.example.BootReceiver"});
    CHECK(features.intent_actions ==
          std::vector<std::string>{"android.intent.action.BOOT_COMPLETED"});
    CHECK(features.total() == 4);
}

TEST_CASE("activity intent-filter actions are not extracted") {
    XmlNode action{"action", {XmlAttr::str("name", "android.intent.action.MAIN")}, {}};
    XmlNode filter{"intent-filter", {}, {action}};
    XmlNode activity{"activity", {XmlAttr::str("name", ".Main")}, {filter}};
    XmlNode app{"application", {}, {activity}};
    XmlNode manifest{"manifest", {}, {app}};

    auto features = extract_features(parse_tree(manifest), "id2");
    CHECK(features.intent_actions.empty());
}

TEST_CASE("duplicate features are deduplicated") {
    XmlNode p1{"uses-permission", {XmlAttr::str("name", "android.permission.CAMERA")}, {}};
    XmlNode p2{"uses-permission", {XmlAttr::str("name", "android.permission.CAMERA")}, {}};
    XmlNode manifest{"manifest", {}, {p1, p2}};
    auto features = extract_features(parse_tree(manifest), "id3");
    CHECK(features.permissions.size() == 1);
}

TEST_CASE("extract_from_apk uses the file hash as the apk id") {
    TempDir dir;
    auto fixtures = write_fixture_apks(dir.str("apks"));
    REQUIRE(fixtures.size() == 6);

    auto features = extract_from_apk(dir.str("apks/" + fixtures[0].filename));
    CHECK(features.apk_id.size() == 64);
    CHECK(is_hex64(features.apk_id));
    CHECK(features.permissions == fixtures[0].permissions);
    CHECK(features.services == fixtures[0].services);
    CHECK(features.receivers == fixtures[0].receivers);
    CHECK(features.intent_actions == fixtures[0].intent_actions);
}

TEST_CASE("all six fixture apks extract exactly their declared features") {
    TempDir dir;
    auto fixtures = write_fixture_apks(dir.str("apks"));
    for (const auto& fixture : fixtures) {
        CAPTURE(fixture.filename);
        auto features = extract_from_apk(dir.str("apks/" + fixture.filename));
        CHECK(features.permissions == fixture.permissions);
        CHECK(features.services == fixture.services);
        CHECK(features.receivers == fixture.receivers);
        CHECK(features.intent_actions == fixture.intent_actions);
    }
}

TEST_CASE("features json round trip") {
    TempDir dir;
    StaticFeatureSet a;
    a.apk_id = "one";
    a.permissions = {"android.permission.INTERNET"};
    a.intent_actions = {"android.intent.action.VIEW"};
    StaticFeatureSet b;
    b.apk_id = "two";
    b.services = {"com.example.S"};

    write_features_json({a, b}, dir.str("features.jsonl"));
    auto loaded = load_features_json(dir.str("features.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].apk_id == "one");
    CHECK(loaded[0].permissions == a.permissions);
    CHECK(loaded[0].intent_actions == a.intent_actions);
    CHECK(loaded[1].services == b.services);
}

TEST_CASE("malformed features line reports its line number") {
    TempDir dir;
    std::ofstream(dir.str("bad.jsonl")) << R"({"apk_id":"ok"})"
                                        << "\n"
                                        << "not json\n";
    try {
        load_features_json(dir.str("bad.jsonl"));
        FAIL("expected MalformedRecord");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MalformedRecord);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}
