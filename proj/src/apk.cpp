#include "dexter/apk.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "dexter/errors.hpp"

namespace dexter {

namespace {

constexpr uint32_t kEocdSignature = 0x06054B50;
constexpr uint32_t kCentralSignature = 0x02014B50;
constexpr uint32_t kLocalSignature = 0x04034B50;
constexpr uint16_t kMethodStored = 0;
constexpr uint16_t kMethodDeflated = 8;

uint16_t read_u16(const std::vector<uint8_t>& b, size_t pos) {
    return static_cast<uint16_t>(b[pos]) | static_cast<uint16_t>(b[pos + 1]) << 8;
}

uint32_t read_u32(const std::vector<uint8_t>& b, size_t pos) {
    return static_cast<uint32_t>(b[pos]) | static_cast<uint32_t>(b[pos + 1]) << 8 |
           static_cast<uint32_t>(b[pos + 2]) << 16 | static_cast<uint32_t>(b[pos + 3]) << 24;
}

std::vector<uint8_t> inflate_raw(const uint8_t* data, size_t size, size_t expected) {
    std::vector<uint8_t> out(expected);
    z_stream stream;
    std::memset(&stream, 0, sizeof(stream));
    // Negative window bits: raw deflate stream, no zlib wrapper.
    if (inflateInit2(&stream, -15) != Z_OK) {
        throw Error(ErrorKind::BadArchive, "inflate init failed");
    }
    stream.next_in = const_cast<uint8_t*>(data);
    stream.avail_in = static_cast<uInt>(size);
    stream.next_out = out.data();
    stream.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&stream, Z_FINISH);
    size_t produced = out.size() - stream.avail_out;
    inflateEnd(&stream);
    if (rc != Z_STREAM_END || produced != expected) {
        throw Error(ErrorKind::BadArchive, "deflated entry did not decompress cleanly");
    }
    return out;
}

}  // namespace

ApkArchive::ApkArchive(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path);
    }
    in.seekg(0, std::ios::end);
    std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    bytes_.resize(static_cast<size_t>(size));
    if (size > 0) {
        in.read(reinterpret_cast<char*>(bytes_.data()), size);
    }
    if (!in) {
        throw Error(ErrorKind::IoError, "read failed for " + path);
    }

    // End-of-central-directory record: scan backwards through the final 64 KiB
    // (the record allows a trailing comment of up to 65535 bytes).
    if (bytes_.size() < 22) {
        throw Error(ErrorKind::BadArchive, "file too small to be an archive");
    }
    size_t scan_floor = bytes_.size() > (1 << 16) + 22 ? bytes_.size() - ((1 << 16) + 22) : 0;
    size_t eocd = bytes_.size();  // sentinel: not found
    for (size_t pos = bytes_.size() - 22 + 1; pos-- > scan_floor;) {
        if (read_u32(bytes_, pos) == kEocdSignature) {
            eocd = pos;
            break;
        }
    }
    if (eocd == bytes_.size()) {
        throw Error(ErrorKind::BadArchive, "no end-of-central-directory record");
    }

    uint16_t entry_count = read_u16(bytes_, eocd + 10);
    uint32_t central_offset = read_u32(bytes_, eocd + 16);
    size_t pos = central_offset;
    for (uint16_t i = 0; i < entry_count; ++i) {
        if (pos + 46 > bytes_.size() || read_u32(bytes_, pos) != kCentralSignature) {
            throw Error(ErrorKind::BadArchive, "central directory damaged");
        }
        Entry entry;
        entry.method = read_u16(bytes_, pos + 10);
        entry.compressed_size = read_u32(bytes_, pos + 20);
        entry.uncompressed_size = read_u32(bytes_, pos + 24);
        uint16_t name_len = read_u16(bytes_, pos + 28);
        uint16_t extra_len = read_u16(bytes_, pos + 30);
        uint16_t comment_len = read_u16(bytes_, pos + 32);
        entry.local_header_offset = read_u32(bytes_, pos + 42);
        if (pos + 46 + name_len > bytes_.size()) {
            throw Error(ErrorKind::BadArchive, "entry name truncated");
        }
        entry.name.assign(reinterpret_cast<const char*>(bytes_.data() + pos + 46), name_len);
        entries_.push_back(std::move(entry));
        pos += 46 + static_cast<size_t>(name_len) + extra_len + comment_len;
    }
}

std::vector<std::string> ApkArchive::entry_names() const {
    std::vector<std::string> names;
    names.reserve(entries_.size());
    for (const auto& e : entries_) names.push_back(e.name);
    return names;
}

std::optional<std::vector<uint8_t>> ApkArchive::read_entry(const std::string& name) const {
    const Entry* found = nullptr;
    for (const auto& e : entries_) {
        if (e.name == name) {
            found = &e;
            break;
        }
    }
    if (!found) return std::nullopt;

    size_t pos = found->local_header_offset;
    if (pos + 30 > bytes_.size() || read_u32(bytes_, pos) != kLocalSignature) {
        throw Error(ErrorKind::BadArchive, "local header damaged for " + name);
    }
    // Local header name/extra lengths can differ from the central directory's.
    uint16_t name_len = read_u16(bytes_, pos + 26);
    uint16_t extra_len = read_u16(bytes_, pos + 28);
    size_t data_pos = pos + 30 + static_cast<size_t>(name_len) + extra_len;
    if (data_pos + found->compressed_size > bytes_.size()) {
        throw Error(ErrorKind::BadArchive, "entry data truncated for " + name);
    }

    const uint8_t* data = bytes_.data() + data_pos;
    if (found->method == kMethodStored) {
        if (found->compressed_size != found->uncompressed_size) {
            throw Error(ErrorKind::BadArchive, "stored entry size mismatch for " + name);
        }
        return std::vector<uint8_t>(data, data + found->compressed_size);
    }
    if (found->method == kMethodDeflated) {
        return inflate_raw(data, found->compressed_size, found->uncompressed_size);
    }
    throw Error(ErrorKind::BadArchive,
                "unsupported compression method " + std::to_string(found->method));
}

std::vector<uint8_t> read_manifest_bytes(const std::string& apk_path) {
    ApkArchive archive(apk_path);
    auto bytes = archive.read_entry("AndroidManifest.xml");
    if (!bytes) {
        throw Error(ErrorKind::BadArchive, "no AndroidManifest.xml in " + apk_path);
    }
    return *bytes;
}

}  // namespace dexter
