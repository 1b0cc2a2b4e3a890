#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dexter::testsupport {

// Writes a ZIP archive from in-memory entries, with stored or deflated
// payloads. Timestamps are zeroed so identical input produces identical
// bytes.
class ZipBuilder {
public:
    void add_stored(const std::string& name, const std::vector<uint8_t>& content);
    void add_deflated(const std::string& name, const std::vector<uint8_t>& content);

    std::vector<uint8_t> finish() const;
    void write_file(const std::string& path) const;

private:
    struct Entry {
        std::string name;
        uint16_t method = 0;
        uint32_t crc = 0;
        std::vector<uint8_t> compressed;
        uint32_t uncompressed_size = 0;
    };

    std::vector<Entry> entries_;
};

}  // namespace dexter::testsupport
