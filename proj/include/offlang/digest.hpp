#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace offlang {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

// First 16 hex digits of the SHA-256 of a canonical config dump.
std::string fingerprint(std::string_view canonical);

std::string crypto_library_version();

}  // namespace offlang
