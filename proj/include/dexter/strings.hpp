#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dexter {

// Decodes UTF-8 into Unicode scalar values. Invalid byte sequences decode to
// U+FFFD (one replacement per maximal invalid subsequence prefix byte), so
// arbitrary bytes always produce a usable result.
std::vector<char32_t> utf8_decode(std::string_view text);

// Encodes scalar values back to UTF-8.
std::string utf8_encode(const std::vector<char32_t>& scalars);

// ASCII-only case fold: 'A'..'Z' map to 'a'..'z', everything else unchanged.
std::string ascii_fold(std::string_view text);
char32_t ascii_fold(char32_t c);

bool is_ascii_alnum(char c);

std::string trim(std::string_view text);

// Splits on any character in `separators`; empty pieces are dropped.
std::vector<std::string> split_any(std::string_view text, std::string_view separators);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

std::string to_hex(const uint8_t* data, size_t size);

// True if `text` is exactly 64 lowercase-insensitive hex characters.
bool is_hex64(std::string_view text);

}  // namespace dexter
