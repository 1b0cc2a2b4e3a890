#include "fixture_apks.hpp"

#include <filesystem>

#include "axml_builder.hpp"
#include "zip_builder.hpp"

namespace dexter::testsupport {

namespace {

XmlNode action_node(const std::string& name) {
    XmlNode action{"action", {XmlAttr::str("name", name)}, {}};
    return action;
}

XmlNode filter_node(const std::vector<std::string>& actions) {
    XmlNode filter{"intent-filter", {}, {}};
    for (const auto& action : actions) {
        filter.children.push_back(action_node(action));
    }
    return filter;
}

XmlNode component_node(const std::string& tag, const std::string& name,
                       const std::vector<std::string>& filter_actions) {
    XmlNode component{tag, {XmlAttr::str("name", name)}, {}};
    if (!filter_actions.empty()) {
        component.children.push_back(filter_node(filter_actions));
    }
    return component;
}

// Every fixture also carries a launcher activity whose intent-filter holds
// android.intent.action.MAIN; actions under activity filters must never be
// extracted, so this doubles as a negative case.
XmlNode launcher_activity() {
    XmlNode activity{"activity", {XmlAttr::str("name", ".MainActivity")}, {}};
    activity.children.push_back(filter_node({"android.intent.action.MAIN"}));
    return activity;
}

struct ComponentSpec {
    std::string tag;
    std::string name;
    std::vector<std::string> filter_actions;
};

XmlNode build_manifest(const std::string& package_name,
                       const std::vector<std::string>& permissions,
                       const std::vector<ComponentSpec>& components) {
    XmlNode manifest{"manifest", {}, {}};
    XmlAttr package_attr;
    package_attr.name = "package";
    package_attr.value = package_name;
    manifest.attributes.push_back(package_attr);
    manifest.attributes.push_back(XmlAttr::typed("versionCode", 0x10, 1));

    for (const auto& permission : permissions) {
        manifest.children.push_back(
            XmlNode{"uses-permission", {XmlAttr::str("name", permission)}, {}});
    }

    XmlNode application{"application", {XmlAttr::str("label", "Fixture App")}, {}};
    application.children.push_back(launcher_activity());
    for (const auto& component : components) {
        application.children.push_back(
            component_node(component.tag, component.name, component.filter_actions));
    }
    manifest.children.push_back(std::move(application));
    return manifest;
}

void write_apk(const std::filesystem::path& path, const XmlNode& manifest,
               PoolEncoding encoding, bool deflate_manifest) {
    auto axml = encode_axml(manifest, encoding);
    ZipBuilder zip;
    if (deflate_manifest) {
        zip.add_deflated("AndroidManifest.xml", axml);
    } else {
        zip.add_stored("AndroidManifest.xml", axml);
    }
    std::vector<uint8_t> dex{'d', 'e', 'x', '\n', '0', '3', '5', 0};
    zip.add_stored("classes.dex", dex);
    std::string mf = "Manifest-Version: 1.0\n";
    zip.add_deflated("META-INF/MANIFEST.MF", std::vector<uint8_t>(mf.begin(), mf.end()));
    zip.write_file(path.string());
}

}  // namespace

std::vector<FixtureApk> write_fixture_apks(const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<FixtureApk> fixtures;

    auto emit = [&](const std::string& filename, const std::string& package_name,
                    const std::vector<std::string>& permissions,
                    const std::vector<ComponentSpec>& components, PoolEncoding encoding,
                    bool deflate_manifest) {
        auto manifest = build_manifest(package_name, permissions, components);
        write_apk(std::filesystem::path(dir) / filename, manifest, encoding, deflate_manifest);

        FixtureApk fixture;
        fixture.filename = filename;
        fixture.package_name = package_name;
        fixture.permissions = permissions;
        for (const auto& component : components) {
            if (component.tag == "service") {
                fixture.services.push_back(component.name);
            } else if (component.tag == "receiver") {
                fixture.receivers.push_back(component.name);
            }
            for (const auto& action : component.filter_actions) {
                fixture.intent_actions.push_back(action);
            }
        }
        fixtures.push_back(std::move(fixture));
    };

    emit("01_alpha.apk", "com.fixture.alpha",
         {"android.permission.INTERNET", "android.permission.RECEIVE_SMS"},
         {{"service", "com.example.sync.SyncService", {}},
          {"receiver", "com.example.sms.SmsReceiver",
           {"android.provider.Telephony.SMS_RECEIVED"}}},
         PoolEncoding::Utf8, true);

    emit("02_beta.apk", "com.fixture.beta",
         {"android.permission.INTERNET", "android.permission.ACCESS_FINE_LOCATION"},
         {{"service", "com.example.tracker.LocationService", {}},
          {"receiver", "com.example.boot.BootReceiver", {"android.intent.action.BOOT_COMPLETED"}}},
         PoolEncoding::Utf16, true);

    emit("03_gamma.apk", "com.fixture.gamma",
         {"android.permission.CAMERA", "com.fixture.gamma.permission.PRIVATE_API"},
         {{"service", "com.fixture.gamma.CaptureService", {"android.intent.action.MAIN"}}},
         PoolEncoding::Utf8, false);

    emit("04_delta.apk", "com.fixture.delta",
         {"Android.Permission.Internet", "android.permission.SEND_SMS"},
         {{"service", "com.example.upload.UploadService", {}},
          {"receiver", "com.example.net.ConnectivityReceiver", {}}},
         PoolEncoding::Utf16, false);

    emit("05_epsilon.apk", "com.fixture.epsilon", {"android.permission.SEND_SMSS"},
         {{"service", "com.fixture.epsilon.MinerService", {}}}, PoolEncoding::Utf8, true);

    emit("06_zeta.apk", "com.fixture.zeta", {},
         {{"service", "com.example.media.PlaybackService", {"android.intent.action.VIEW"}}},
         PoolEncoding::Utf8, true);

    return fixtures;
}

}  // namespace dexter::testsupport
