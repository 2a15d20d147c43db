#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "habsk/errors.hpp"

namespace habsk::binio {

inline std::uint32_t to_le(std::uint32_t x) noexcept {
    if constexpr (std::endian::native == std::endian::big)
        return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
    return x;
}

inline void write_f32(std::ostream& os, float f) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(f));
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

inline float read_f32(std::istream& is) {
    std::uint32_t bits = 0;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw DataError("truncated float32 payload");
    return std::bit_cast<float>(to_le(bits));
}

inline void write_u64(std::ostream& os, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((x >> (8 * i)) & 0xffu));
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("truncated integer payload");
    std::uint64_t x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
    return x;
}

template <typename T>
void write_f32_span(std::ostream& os, std::span<const T> values) {
    for (T x : values) write_f32(os, static_cast<float>(x));
}

template <typename T>
void read_f32_into(std::istream& is, std::span<T> out) {
    for (T& x : out) x = static_cast<T>(read_f32(is));
}

}  // namespace habsk::binio
