#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by ingestion, normalization and tokenization.
namespace offlang::text {

std::string_view trim(std::string_view s);
std::string ascii_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_ascii_space(char c);
bool is_ascii_digit(char c);
bool is_ascii_alnum(char c);

/// One decoded code point. Invalid UTF-8 bytes decode as a single byte with
/// `valid == false` so callers can pass them through unchanged.
struct CodePoint {
    char32_t value = 0;
    std::size_t length = 1;
    bool valid = true;
};

CodePoint decode_utf8(std::string_view s, std::size_t pos);
std::string encode_utf8(char32_t cp);

// Escapes backslash, tab, CR and LF so a value fits in one TSV cell.
std::string escape_tsv(std::string_view s);
std::string unescape_tsv(std::string_view s);

}  // namespace offlang::text
