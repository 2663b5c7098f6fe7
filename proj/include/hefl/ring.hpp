#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace hefl {

/// Residue modulo Q = 2^64. Arithmetic is native unsigned wraparound.
struct RingElement {
    std::uint64_t value = 0;

    constexpr RingElement() = default;
    constexpr explicit RingElement(std::uint64_t v) : value(v) {}

    static constexpr RingElement from_signed(std::int64_t v) {
        return RingElement(static_cast<std::uint64_t>(v));
    }
    constexpr std::int64_t as_signed() const { return static_cast<std::int64_t>(value); }
    constexpr bool msb() const { return (value >> 63) != 0; }

    constexpr RingElement& operator+=(RingElement o) { value += o.value; return *this; }
    constexpr RingElement& operator-=(RingElement o) { value -= o.value; return *this; }
    constexpr RingElement& operator*=(RingElement o) { value *= o.value; return *this; }

    friend constexpr RingElement operator+(RingElement a, RingElement b) { return a += b; }
    friend constexpr RingElement operator-(RingElement a, RingElement b) { return a -= b; }
    friend constexpr RingElement operator*(RingElement a, RingElement b) { return a *= b; }
    friend constexpr RingElement operator-(RingElement a) { return RingElement(0 - a.value); }
    friend constexpr bool operator==(RingElement, RingElement) = default;
    friend constexpr auto operator<=>(RingElement, RingElement) = default;
};

static_assert(sizeof(RingElement) == sizeof(std::uint64_t));

inline constexpr int kRingBits = 64;

constexpr RingElement ring_add(RingElement a, RingElement b) { return a + b; }
constexpr RingElement ring_mul(RingElement a, RingElement b) { return a * b; }
constexpr RingElement ring_neg(RingElement a) { return -a; }

/// Arithmetic shift right on the signed reading of r (floor division by 2^shift).
constexpr RingElement ring_shift_signed(RingElement r, int shift) {
    return RingElement::from_signed(r.as_signed() >> shift);
}

/// Real <-> ring bridge: x maps to round(x * 2^f) in two's complement.
struct FixedPointCodec {
    int frac_bits = 16;

    /// Exclusive bound 2^(63 - f - 1) on encodable magnitudes.
    double max_magnitude() const;
    RingElement encode(double x) const;
    double decode(RingElement r) const;
    /// Decode a value carrying `bits` fractional bits (e.g. 2f after a product).
    double decode_with(RingElement r, int bits) const;
    /// Fixed-point one, 2^f.
    RingElement one() const { return RingElement(std::uint64_t{1} << frac_bits); }

    std::vector<RingElement> encode(std::span<const double> xs) const;
    std::vector<double> decode(std::span<const RingElement> rs) const;
};

/// Throws Error(kOverflow) when |x| >= max_magnitude or x is not finite.
RingElement encode_fixed(double x, const FixedPointCodec& codec);
double decode_fixed(RingElement r, const FixedPointCodec& codec);

}  // namespace hefl
