#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace diode {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

// Big-endian (network order) field codecs used by the packet layouts.
inline void put_u32_be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u64_be(Bytes& out, std::uint64_t v) {
    put_u32_be(out, static_cast<std::uint32_t>(v >> 32));
    put_u32_be(out, static_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32_be(ByteView in, std::size_t off) {
    return (std::uint32_t{in[off]} << 24) | (std::uint32_t{in[off + 1]} << 16) |
           (std::uint32_t{in[off + 2]} << 8) | std::uint32_t{in[off + 3]};
}

inline std::uint64_t get_u64_be(ByteView in, std::size_t off) {
    return (std::uint64_t{get_u32_be(in, off)} << 32) | get_u32_be(in, off + 4);
}

std::string base64_encode(ByteView data);
Bytes base64_decode(std::string_view text);  // accepts embedded whitespace/newlines

}  // namespace diode
