#include <doctest.h>

#include <fstream>

#include "dexter/apk.hpp"
#include "dexter/errors.hpp"
#include "temp_dir.hpp"
#include "zip_builder.hpp"

using namespace dexter;
using namespace dexter::testsupport;

namespace {

std::vector<uint8_t> bytes_of(const std::string& text) {
    return std::vector<uint8_t>(text.begin(), text.end());
}

}  // namespace

TEST_CASE("zip round trip for stored and deflated entries") {
    TempDir dir;
    ZipBuilder builder;
    std::string long_text(5000, 'x');
    long_text += "tail";
    builder.add_stored("stored.txt", bytes_of("hello stored"));
    builder.add_deflated("deflated.txt", bytes_of(long_text));
    builder.write_file(dir.str("a.zip"));

    ApkArchive archive(dir.str("a.zip"));
    auto names = archive.entry_names();
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "stored.txt");
    CHECK(names[1] == "deflated.txt");

    auto stored = archive.read_entry("stored.txt");
    REQUIRE(stored.has_value());
    CHECK(std::string(stored->begin(), stored->end()) == "hello stored");

    auto deflated = archive.read_entry("deflated.txt");
    REQUIRE(deflated.has_value());
    CHECK(deflated->size() == long_text.size());
    CHECK(std::string(deflated->begin(), deflated->end()) == long_text);

    CHECK(!archive.read_entry("missing.txt").has_value());
}

TEST_CASE("zip builder output is byte deterministic") {
    ZipBuilder a;
    a.add_deflated("f", bytes_of("same content both times"));
    ZipBuilder b;
    b.add_deflated("f", bytes_of("same content both times"));
    CHECK(a.finish() == b.finish());
}

TEST_CASE("not a zip file is a typed error") {
    TempDir dir;
    std::ofstream(dir.str("junk.apk")) << "this is not an archive at all";
    try {
        ApkArchive archive(dir.str("junk.apk"));
        FAIL("expected BadArchive");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BadArchive);
    }
}

TEST_CASE("truncated central directory is a typed error") {
    TempDir dir;
    ZipBuilder builder;
    builder.add_stored("AndroidManifest.xml", bytes_of("pretend manifest"));
    auto bytes = builder.finish();
    bytes.resize(bytes.size() - 7);  // clip into the end-of-directory record
    std::ofstream out(dir.str("cut.apk"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_AS(ApkArchive(dir.str("cut.apk")), Error);
}

TEST_CASE("read_manifest_bytes pulls the manifest entry") {
    TempDir dir;
    ZipBuilder builder;
    builder.add_stored("classes.dex", bytes_of("dex"));
    builder.add_deflated("AndroidManifest.xml", bytes_of("manifest bytes"));
    builder.write_file(dir.str("m.apk"));
    auto manifest = read_manifest_bytes(dir.str("m.apk"));
    CHECK(std::string(manifest.begin(), manifest.end()) == "manifest bytes");
}

TEST_CASE("missing manifest is a typed error") {
    TempDir dir;
    ZipBuilder builder;
    builder.add_stored("classes.dex", bytes_of("dex"));
    builder.write_file(dir.str("nomanifest.apk"));
    CHECK_THROWS_AS(read_manifest_bytes(dir.str("nomanifest.apk")), Error);
}
