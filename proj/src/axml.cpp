#include "dexter/axml.hpp"

#include <cstdio>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

constexpr uint16_t kChunkXmlDocument = 0x0003;
constexpr uint16_t kChunkStringPool = 0x0001;
constexpr uint16_t kChunkResourceMap = 0x0180;
constexpr uint16_t kChunkStartNamespace = 0x0100;
constexpr uint16_t kChunkEndNamespace = 0x0101;
constexpr uint16_t kChunkStartElement = 0x0102;
constexpr uint16_t kChunkEndElement = 0x0103;
constexpr uint16_t kChunkCdata = 0x0104;

constexpr uint32_t kNoEntry = 0xFFFFFFFF;
constexpr uint32_t kStringPoolUtf8Flag = 1u << 8;

// Attribute value types from the resource format.
constexpr uint8_t kTypeReference = 0x01;
constexpr uint8_t kTypeString = 0x03;
constexpr uint8_t kTypeFloat = 0x04;
constexpr uint8_t kTypeIntDec = 0x10;
constexpr uint8_t kTypeIntHex = 0x11;
constexpr uint8_t kTypeIntBoolean = 0x12;

class Cursor {
public:
    Cursor(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    size_t size() const { return size_; }

    uint8_t u8(uint64_t pos) const {
        check(pos, 1);
        return data_[pos];
    }

    uint16_t u16(uint64_t pos) const {
        check(pos, 2);
        return static_cast<uint16_t>(data_[pos]) |
               static_cast<uint16_t>(data_[pos + 1]) << 8;
    }

    uint32_t u32(uint64_t pos) const {
        check(pos, 4);
        return static_cast<uint32_t>(data_[pos]) |
               static_cast<uint32_t>(data_[pos + 1]) << 8 |
               static_cast<uint32_t>(data_[pos + 2]) << 16 |
               static_cast<uint32_t>(data_[pos + 3]) << 24;
    }

    bool has(uint64_t pos, uint64_t count) const {
        return pos <= size_ && count <= size_ - pos;
    }

private:
    void check(uint64_t pos, uint64_t count) const {
        if (!has(pos, count)) {
            throw Error(ErrorKind::TruncatedChunk,
                        "read past end of buffer at offset " + std::to_string(pos));
        }
    }

    const uint8_t* data_;
    size_t size_;
};

class StringPool {
public:
    StringPool() = default;

    // Decodes the pool chunk at [chunk_pos, chunk_pos + chunk_size).
    StringPool(const Cursor& cur, uint64_t chunk_pos, uint64_t chunk_size) {
        uint16_t header_size = cur.u16(chunk_pos + 2);
        uint32_t string_count = cur.u32(chunk_pos + 8);
        uint32_t flags = cur.u32(chunk_pos + 16);
        uint32_t strings_start = cur.u32(chunk_pos + 20);
        bool utf8 = (flags & kStringPoolUtf8Flag) != 0;

        if (header_size < 28 || header_size > chunk_size) {
            throw Error(ErrorKind::TruncatedChunk, "string pool header size invalid");
        }
        uint64_t offsets_pos = chunk_pos + header_size;
        uint64_t data_pos = chunk_pos + strings_start;
        uint64_t chunk_end = chunk_pos + chunk_size;
        if (strings_start > chunk_size) {
            throw Error(ErrorKind::TruncatedChunk, "string data starts past pool end");
        }
        // Each string needs a 4-byte offset entry between the header and the
        // end of the chunk, which caps a believable count well before the
        // reserve below could ask for absurd amounts of memory.
        if (static_cast<uint64_t>(string_count) * 4 > chunk_size - header_size) {
            throw Error(ErrorKind::TruncatedChunk, "string count exceeds pool size");
        }

        strings_.reserve(string_count);
        for (uint32_t i = 0; i < string_count; ++i) {
            uint32_t offset = cur.u32(offsets_pos + static_cast<uint64_t>(i) * 4);
            uint64_t pos = data_pos + offset;
            if (pos >= chunk_end) {
                throw Error(ErrorKind::TruncatedChunk, "string offset past pool end");
            }
            strings_.push_back(utf8 ? decode_utf8(cur, pos, chunk_end)
                                    : decode_utf16(cur, pos, chunk_end));
        }
    }

    const std::string& at(uint32_t index) const {
        if (index >= strings_.size()) {
            throw Error(ErrorKind::StringIndexOutOfRange,
                        "string index " + std::to_string(index) + " out of range (pool size " +
                            std::to_string(strings_.size()) + ")");
        }
        return strings_[index];
    }

    size_t size() const { return strings_.size(); }

private:
    // UTF-8 strings carry two length prefixes (character count, then byte
    // count), each one or two bytes depending on the high bit.
    static std::string decode_utf8(const Cursor& cur, uint64_t pos, uint64_t end) {
        uint64_t p = pos;
        p += (cur.u8(p) & 0x80) ? 2 : 1;  // character count, unused
        uint64_t byte_len = cur.u8(p);
        if (byte_len & 0x80) {
            byte_len = ((byte_len & 0x7F) << 8) | cur.u8(p + 1);
            p += 2;
        } else {
            p += 1;
        }
        if (!cur.has(p, byte_len) || p + byte_len > end) {
            throw Error(ErrorKind::TruncatedChunk, "string data truncated");
        }
        std::string raw;
        raw.reserve(byte_len);
        for (uint64_t i = 0; i < byte_len; ++i) {
            raw.push_back(static_cast<char>(cur.u8(p + i)));
        }
        // Re-encode through the scalar decoder so invalid bytes become U+FFFD.
        return utf8_encode(utf8_decode(raw));
    }

    // UTF-16LE strings carry a code-unit count (with a high-bit extension for
    // long strings) followed by the units.
    static std::string decode_utf16(const Cursor& cur, uint64_t pos, uint64_t end) {
        uint64_t p = pos;
        uint64_t unit_len = cur.u16(p);
        if (unit_len & 0x8000) {
            unit_len = ((unit_len & 0x7FFF) << 16) | cur.u16(p + 2);
            p += 4;
        } else {
            p += 2;
        }
        if (!cur.has(p, unit_len * 2) || p + unit_len * 2 > end) {
            throw Error(ErrorKind::TruncatedChunk, "string data truncated");
        }
        std::vector<char32_t> scalars;
        scalars.reserve(unit_len);
        for (uint64_t i = 0; i < unit_len; ++i) {
            uint16_t unit = cur.u16(p + i * 2);
            if (unit >= 0xD800 && unit <= 0xDBFF && i + 1 < unit_len) {
                uint16_t low = cur.u16(p + (i + 1) * 2);
                if (low >= 0xDC00 && low <= 0xDFFF) {
                    scalars.push_back(0x10000 + ((static_cast<char32_t>(unit) - 0xD800) << 10) +
                                      (low - 0xDC00));
                    ++i;
                    continue;
                }
            }
            if (unit >= 0xD800 && unit <= 0xDFFF) {
                scalars.push_back(0xFFFD);
            } else {
                scalars.push_back(unit);
            }
        }
        return utf8_encode(scalars);
    }

    std::vector<std::string> strings_;
};

std::string resolved_string(const StringPool& pool, uint32_t index) {
    return index == kNoEntry ? std::string() : pool.at(index);
}

std::string render_attribute_value(const StringPool& pool, uint32_t raw_index,
                                   uint8_t data_type, uint32_t data) {
    switch (data_type) {
        case kTypeString:
            if (raw_index != kNoEntry) return pool.at(raw_index);
            return pool.at(data);
        case kTypeReference: {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "0x%08x", data);
            return std::string("@ref:") + buf;
        }
        case kTypeIntDec:
            return std::to_string(static_cast<int32_t>(data));
        case kTypeIntHex: {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "0x%x", data);
            return buf;
        }
        case kTypeIntBoolean:
            return data != 0 ? "true" : "false";
        case kTypeFloat: {
            float value;
            static_assert(sizeof(value) == sizeof(data));
            __builtin_memcpy(&value, &data, sizeof(value));
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", static_cast<double>(value));
            return buf;
        }
        default:
            if (raw_index != kNoEntry) return pool.at(raw_index);
            return std::to_string(data);
    }
}

}  // namespace

const ManifestAttribute* ManifestElement::find_attribute(const std::string& attr_name) const {
    for (const auto& attr : attributes) {
        if (attr.name == attr_name) return &attr;
    }
    return nullptr;
}

ManifestDocument parse_axml(const std::vector<uint8_t>& buffer) {
    Cursor cur(buffer.data(), buffer.size());
    if (buffer.size() < 8) {
        throw Error(ErrorKind::TruncatedChunk, "buffer smaller than a chunk header");
    }
    uint16_t doc_type = cur.u16(0);
    uint16_t doc_header = cur.u16(2);
    uint32_t doc_size = cur.u32(4);
    if (doc_type != kChunkXmlDocument) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "0x%04x", doc_type);
        throw Error(ErrorKind::UnknownChunkType, std::string("document chunk type ") + buf);
    }
    if (doc_size < 8 || doc_size > buffer.size() || doc_header < 8 || doc_header > doc_size) {
        throw Error(ErrorKind::TruncatedChunk, "document chunk size exceeds buffer");
    }

    StringPool pool;
    bool have_pool = false;

    ManifestDocument doc;
    // Invariant: a vector on this stack's path only grows while it belongs to
    // the innermost open element, so the stored pointers never dangle.
    std::vector<ManifestElement*> stack;

    auto attach = [&](ManifestElement&& element) -> ManifestElement* {
        if (stack.empty()) {
            doc.roots.push_back(std::move(element));
            return &doc.roots.back();
        }
        stack.back()->children.push_back(std::move(element));
        return &stack.back()->children.back();
    };

    uint64_t pos = doc_header;
    while (pos < doc_size) {
        if (!cur.has(pos, 8)) {
            throw Error(ErrorKind::TruncatedChunk, "chunk header truncated");
        }
        uint16_t type = cur.u16(pos);
        uint16_t header_size = cur.u16(pos + 2);
        uint32_t chunk_size = cur.u32(pos + 4);
        if (chunk_size < 8 || header_size < 8 || header_size > chunk_size ||
            pos + chunk_size > doc_size) {
            throw Error(ErrorKind::TruncatedChunk, "chunk bounds invalid at offset " +
                                                       std::to_string(pos));
        }

        switch (type) {
            case kChunkStringPool:
                pool = StringPool(cur, pos, chunk_size);
                have_pool = true;
                break;
            case kChunkResourceMap:
            case kChunkStartNamespace:
            case kChunkEndNamespace:
            case kChunkCdata:
                break;
            case kChunkStartElement: {
                if (!have_pool) {
                    throw Error(ErrorKind::TruncatedChunk, "element before string pool");
                }
                uint64_t body = pos + header_size;
                uint32_t name_index = cur.u32(body + 4);
                uint16_t attr_start = cur.u16(body + 8);
                uint16_t attr_size = cur.u16(body + 10);
                uint16_t attr_count = cur.u16(body + 12);
                if (attr_size < 20) attr_size = 20;

                ManifestElement element;
                element.name = pool.at(name_index);

                uint64_t attr_pos = body + attr_start;
                for (uint16_t i = 0; i < attr_count; ++i) {
                    uint64_t a = attr_pos + static_cast<uint64_t>(i) * attr_size;
                    if (!cur.has(a, 20) || a + 20 > pos + chunk_size) {
                        throw Error(ErrorKind::TruncatedChunk, "attribute block truncated");
                    }
                    uint32_t attr_ns = cur.u32(a);
                    uint32_t attr_name = cur.u32(a + 4);
                    uint32_t raw_value = cur.u32(a + 8);
                    uint8_t data_type = cur.u8(a + 15);
                    uint32_t data = cur.u32(a + 16);

                    ManifestAttribute attribute;
                    attribute.ns = resolved_string(pool, attr_ns);
                    attribute.name = pool.at(attr_name);
                    attribute.value = render_attribute_value(pool, raw_value, data_type, data);
                    element.attributes.push_back(std::move(attribute));
                }
                ManifestElement* placed = attach(std::move(element));
                stack.push_back(placed);
                break;
            }
            case kChunkEndElement:
                // Stray end tags are ignored; anything still open at the end
                // of the buffer is treated as closed.
                if (!stack.empty()) stack.pop_back();
                break;
            default:
                throw Error(ErrorKind::UnknownChunkType,
                            "chunk type " + std::to_string(type) + " at offset " +
                                std::to_string(pos));
        }
        pos += chunk_size;
    }
    return doc;
}

}  // namespace dexter
