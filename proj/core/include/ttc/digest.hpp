#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttc {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ConfigError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// First 8 bytes of a SHA-256 digest as an integer; used to derive seeds.
std::uint64_t digest_seed(std::string_view text);

}  // namespace ttc
