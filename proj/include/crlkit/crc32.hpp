#pragma once

#include <cstdint>
#include <cstddef>

namespace crlkit {

/// Standard CRC-32 (reflected 0xEDB88320, init and final xor 0xFFFFFFFF).
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace crlkit
