#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace packdet {

/// SHA-256 of the byte sequence as a lowercase hex string.
std::string sha256_hex(std::span<const uint8_t> data);

} // namespace packdet
