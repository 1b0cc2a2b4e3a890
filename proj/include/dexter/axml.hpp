#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dexter {

// Element tree decoded from Android binary XML. Attribute values arrive
// resolved against the document's string pool; typed values (ints, booleans,
// resource references) are rendered to text.
struct ManifestAttribute {
    std::string ns;  // namespace URI, empty when the attribute has none
    std::string name;
    std::string value;
};

struct ManifestElement {
    std::string name;
    std::vector<ManifestAttribute> attributes;
    std::vector<ManifestElement> children;

    const ManifestAttribute* find_attribute(const std::string& attr_name) const;
};

struct ManifestDocument {
    // A well-formed manifest has a single root; the parser tolerates
    // unbalanced input by keeping every top-level element it saw.
    std::vector<ManifestElement> roots;
};

// Parses a binary-XML buffer (chunk type 0x0003). Throws Error with kind
// TruncatedChunk, UnknownChunkType, or StringIndexOutOfRange on malformed
// input; never crashes on arbitrary bytes.
ManifestDocument parse_axml(const std::vector<uint8_t>& buffer);

}  // namespace dexter
