#include <doctest.h>

#include <fstream>
#include <thread>

#include "dexter/cache.hpp"
#include "dexter/errors.hpp"
#include "temp_dir.hpp"

using namespace dexter;
using namespace dexter::testsupport;

namespace {

CacheEntry entry_of(FeatureCategory category, const std::string& name,
                    const std::string& description,
                    DescriptionSource source = DescriptionSource::Corpus) {
    CacheEntry entry;
    entry.category = category;
    entry.name = name;
    entry.description = description;
    entry.source = source;
    entry.created_at = 1700000000;
    return entry;
}

}  // namespace

TEST_CASE("in-memory cache get and put") {
    DescriptionCache cache;
    CHECK(!cache.get(FeatureCategory::Permission, "android.permission.X").has_value());
    cache.put(entry_of(FeatureCategory::Permission, "android.permission.X", "does X."));

    auto hit = cache.get(FeatureCategory::Permission, "android.permission.X");
    REQUIRE(hit.has_value());
    CHECK(hit->description == "does X.");
    CHECK(cache.size() == 1);

    auto stats = cache.stats();
    CHECK(stats.hits == 1);
    CHECK(stats.misses == 1);
    CHECK(stats.inserts == 1);
}

TEST_CASE("cache keys fold case but keep the stored name") {
    DescriptionCache cache;
    cache.put(entry_of(FeatureCategory::Permission, "Android.Permission.INTERNET", "net."));
    auto hit = cache.get(FeatureCategory::Permission, "android.permission.internet");
    REQUIRE(hit.has_value());
    CHECK(hit->name == "Android.Permission.INTERNET");
}

TEST_CASE("same name in different categories does not collide") {
    DescriptionCache cache;
    cache.put(entry_of(FeatureCategory::Permission, "com.example.X", "as permission."));
    cache.put(entry_of(FeatureCategory::Service, "com.example.X", "as service."));
    CHECK(cache.size() == 2);
    CHECK(cache.get(FeatureCategory::Permission, "com.example.X")->description ==
          "as permission.");
    CHECK(cache.get(FeatureCategory::Service, "com.example.X")->description == "as service.");
}

TEST_CASE("empty description is a typed error") {
    DescriptionCache cache;
    CHECK_THROWS_AS(cache.put(entry_of(FeatureCategory::Permission, "x", "")), Error);
}

TEST_CASE("persistence survives reopening, later entries win") {
    TempDir dir;
    std::string path = dir.str("cache.jsonl");
    {
        DescriptionCache cache(path);
        cache.put(entry_of(FeatureCategory::Permission, "a", "first version."));
        cache.put(entry_of(FeatureCategory::Service, "b", "service b.", DescriptionSource::Llm));
        cache.put(entry_of(FeatureCategory::Permission, "a", "second version."));
    }
    DescriptionCache reopened(path);
    CHECK(reopened.size() == 2);
    CHECK(reopened.corrupt_lines() == 0);
    auto a = reopened.get(FeatureCategory::Permission, "a");
    REQUIRE(a.has_value());
    CHECK(a->description == "second version.");
    auto b = reopened.get(FeatureCategory::Service, "b");
    REQUIRE(b.has_value());
    CHECK(b->source == DescriptionSource::Llm);
}

TEST_CASE("corrupt lines are skipped and counted, valid lines still load") {
    TempDir dir;
    std::string path = dir.str("cache.jsonl");
    {
        DescriptionCache cache(path);
        cache.put(entry_of(FeatureCategory::Permission, "keep", "kept."));
    }
    {
        std::ofstream out(path, std::ios::app);
        out << "this is not json\n";
        out << R"({"category":"permission"})" << "\n";  // missing fields
    }
    {
        DescriptionCache cache(path);
        cache.put(entry_of(FeatureCategory::Permission, "more", "more."));
    }
    DescriptionCache cache(path);
    CHECK(cache.size() == 2);
    CHECK(cache.corrupt_lines() == 2);
    CHECK(cache.get(FeatureCategory::Permission, "keep").has_value());
    CHECK(cache.get(FeatureCategory::Permission, "more").has_value());
}

TEST_CASE("concurrent writers do not lose entries") {
    TempDir dir;
    std::string path = dir.str("cache.jsonl");
    {
        DescriptionCache cache(path);
        auto writer = [&cache](int base) {
            for (int i = 0; i < 50; ++i) {
                cache.put(entry_of(FeatureCategory::Service,
                                   "svc" + std::to_string(base + i), "d."));
            }
        };
        std::thread t1(writer, 0);
        std::thread t2(writer, 1000);
        t1.join();
        t2.join();
        CHECK(cache.size() == 100);
    }
    DescriptionCache reopened(path);
    CHECK(reopened.size() == 100);
    CHECK(reopened.corrupt_lines() == 0);
}
