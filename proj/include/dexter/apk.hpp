#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dexter {

// Minimal ZIP reader: enough to pull one entry out of an APK. Handles
// stored and deflated entries; everything else is rejected.
class ApkArchive {
public:
    explicit ApkArchive(const std::string& path);

    // Entry names exactly as stored in the central directory.
    std::vector<std::string> entry_names() const;

    // Decompressed bytes of an entry, or nullopt if the archive has no
    // entry with that name. Throws Error(BadArchive) on structural damage.
    std::optional<std::vector<uint8_t>> read_entry(const std::string& name) const;

    const std::string& path() const { return path_; }

private:
    struct Entry {
        std::string name;
        uint16_t method;
        uint32_t compressed_size;
        uint32_t uncompressed_size;
        uint32_t local_header_offset;
    };

    std::string path_;
    std::vector<uint8_t> bytes_;
    std::vector<Entry> entries_;
};

// Convenience wrapper: reads AndroidManifest.xml out of an APK.
std::vector<uint8_t> read_manifest_bytes(const std::string& apk_path);

}  // namespace dexter
