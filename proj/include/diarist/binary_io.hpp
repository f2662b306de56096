#pragma once

#include "diarist/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace diarist::binio {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; add byte swapping for this target");

template <typename T>
    requires std::is_arithmetic_v<T>
void write(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void write_string(std::ostream& out, const std::string& s) {
    write<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
    requires std::is_arithmetic_v<T>
T read(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw Error(ErrorCode::io, "unexpected end of file");
    }
    return value;
}

inline std::string read_string(std::istream& in, std::uint32_t max_len = 1u << 24) {
    const auto len = read<std::uint32_t>(in);
    if (len > max_len) throw Error(ErrorCode::io, "corrupt string length");
    std::string s(len, '\0');
    if (len != 0 && !in.read(s.data(), len)) throw Error(ErrorCode::io, "unexpected end of file");
    return s;
}

// Magic + version header. A mismatch is fatal: formats are not migrated.
inline void write_header(std::ostream& out, const char (&magic)[5], std::uint32_t version) {
    out.write(magic, 4);
    write<std::uint32_t>(out, version);
}

inline void expect_header(std::istream& in, const char (&magic)[5], std::uint32_t version) {
    char got[4] = {};
    if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
        throw Error(ErrorCode::version_mismatch,
                    std::string("not a ") + magic + " file (bad magic)");
    }
    const auto v = read<std::uint32_t>(in);
    if (v != version) {
        throw Error(ErrorCode::version_mismatch, std::string(magic) + " format version " +
                                                     std::to_string(v) + " is not supported (expected " +
                                                     std::to_string(version) + ")");
    }
}

}  // namespace diarist::binio
