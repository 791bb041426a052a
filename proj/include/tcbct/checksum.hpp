#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace tcbct {

/// CRC-32 of a byte range as 8 lowercase hex digits.
std::string crc32_hex(std::span<const std::byte> bytes);
std::string crc32_hex(std::string_view text);

}  // namespace tcbct
