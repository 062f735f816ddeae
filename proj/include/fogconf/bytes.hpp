#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fogconf {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(const Bytes& b);

// Lowercase hex. Bytewise order of the input is preserved by the
// lexicographic order of the output, which is what canonical encodings
// rely on when element ids become object keys.
std::string hex_encode(const Bytes& b);
std::string hex_encode(std::string_view s);
std::optional<Bytes> hex_decode(std::string_view hex);

// FNV-1a, 64 bit. Stable across platforms; used for state hashes.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string fnv1a64_hex(std::string_view s);

}  // namespace fogconf
