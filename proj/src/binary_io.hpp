#pragma once

// Little-endian primitive serialization shared by the GFV1 and GUCW readers
// and writers. Byte order is pinned explicitly so files round-trip across
// machines regardless of host endianness.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace gucnet::detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool read_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        return false;
    }
    v = static_cast<std::uint32_t>(b[0]) |
        (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) |
        (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

inline void write_f64(std::ostream& os, double d) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline bool read_f64(std::istream& is, double& d) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        return false;
    }
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) {
        u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    d = std::bit_cast<double>(u);
    return true;
}

// True if the stream has no bytes left beyond the current position.
inline bool at_eof(std::istream& is) {
    return is.peek() == std::istream::traits_type::eof();
}

} // namespace gucnet::detail
