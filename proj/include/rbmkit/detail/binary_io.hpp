#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "../errors.hpp"

namespace rbmkit::detail {

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) {
        throw IoError("write failed");
    }
}

// Reads exactly n bytes or reports the file truncated.
inline void read_bytes(std::istream& is, void* data, std::size_t n,
                       const std::string& what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n)) {
        throw FormatError("truncated file while reading " + what);
    }
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    write_bytes(os, buf, 4);
}

inline std::uint32_t read_u32_le(std::istream& is, const std::string& what) {
    unsigned char buf[4];
    read_bytes(is, buf, 4, what);
    return static_cast<std::uint32_t>(buf[0]) |
           (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) |
           (static_cast<std::uint32_t>(buf[3]) << 24);
}

inline void write_u32_be(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4] = {
        static_cast<unsigned char>((v >> 24) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>(v & 0xff),
    };
    write_bytes(os, buf, 4);
}

inline std::uint32_t read_u32_be(std::istream& is, const std::string& what) {
    unsigned char buf[4];
    read_bytes(is, buf, 4, what);
    return (static_cast<std::uint32_t>(buf[0]) << 24) |
           (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) |
           static_cast<std::uint32_t>(buf[3]);
}

// f64 values travel as their IEEE-754 bit pattern, little-endian, so
// round-trips are bit-exact on any host.
inline void write_f64_le(std::ostream& os, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    write_bytes(os, buf, 8);
}

inline double read_f64_le(std::istream& is, const std::string& what) {
    unsigned char buf[8];
    read_bytes(is, buf, 8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    double x;
    std::memcpy(&x, &bits, sizeof(x));
    return x;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open for reading: " + path);
    }
    return is;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open for writing: " + path);
    }
    return os;
}

} // namespace rbmkit::detail
