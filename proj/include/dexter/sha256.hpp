#pragma once

#include <string>
#include <string_view>

namespace dexter {

// SHA-256 digest as 64 lowercase hex characters.
std::string sha256_hex(std::string_view data);

// Streaming digest of a file's bytes. Throws Error(IoError) if the file
// cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace dexter
