#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>

namespace srd {

inline void write_le_doubles(std::ostream& out, std::span<const double> values) {
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

inline bool read_le_doubles(std::istream& in, std::span<double> values) {
    for (double& v : values) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        v = std::bit_cast<double>(bits);
    }
    return true;
}

}  // namespace srd
