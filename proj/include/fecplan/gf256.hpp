#pragma once

// GF(2^8) arithmetic with log/antilog tables over the primitive polynomial
// x^8 + x^4 + x^3 + x^2 + 1 (0x11D), generator element 0x02.

#include <array>
#include <cstdint>

namespace fecplan::gf256 {

inline constexpr unsigned kPrimitivePoly = 0x11D;

namespace detail {

struct Tables {
    std::array<std::uint8_t, 512> exp{};
    std::array<std::uint8_t, 256> log{};
};

inline constexpr Tables build_tables() {
    Tables t{};
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
        t.exp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(x);
        t.log[x] = static_cast<std::uint8_t>(i);
        x <<= 1;
        if (x & 0x100) x ^= kPrimitivePoly;
    }
    // duplicate so exp[log a + log b] needs no modular reduction
    for (int i = 255; i < 512; ++i)
        t.exp[static_cast<std::size_t>(i)] = t.exp[static_cast<std::size_t>(i - 255)];
    t.log[0] = 0;  // log(0) is undefined; callers must special-case zero
    return t;
}

inline constexpr Tables kTables = build_tables();

}  // namespace detail

inline constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) {
    return a ^ b;
}

inline constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    if (a == 0 || b == 0) return 0;
    return detail::kTables.exp[detail::kTables.log[a] + detail::kTables.log[b]];
}

inline constexpr std::uint8_t inverse(std::uint8_t a) {
    // a^254; table form: exp[255 - log a]
    return detail::kTables.exp[255 - detail::kTables.log[a]];
}

inline constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) {
    if (a == 0) return 0;
    return detail::kTables.exp[detail::kTables.log[a] + 255 - detail::kTables.log[b]];
}

inline constexpr std::uint8_t pow(std::uint8_t base, unsigned exponent) {
    std::uint8_t r = 1;
    for (unsigned i = 0; i < exponent; ++i) r = mul(r, base);
    return r;
}

// Reference multiply by shift-and-xor; used in tests to validate the tables.
inline constexpr std::uint8_t mul_slow(std::uint8_t a, std::uint8_t b) {
    unsigned r = 0;
    unsigned aa = a;
    for (unsigned bb = b; bb; bb >>= 1) {
        if (bb & 1) r ^= aa;
        aa <<= 1;
        if (aa & 0x100) aa ^= kPrimitivePoly;
    }
    return static_cast<std::uint8_t>(r);
}

}  // namespace fecplan::gf256
