#include "hefl/conversion.hpp"

#include <string>

namespace hefl {

namespace {

std::size_t words_of(const BinarySharing& x) { return x.empty() ? 0 : x[0].bits.size(); }

void require_batch(std::size_t have, std::size_t need, const char* what) {
    require(have == need, ErrorCode::kLengthMismatch,
            std::string(what) + ": batch holds " + std::to_string(have) + ", operation needs " +
                std::to_string(need));
}

// AND gate using triples [offset, offset + n) of the batch.
BinarySharing and_at(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                     const BinaryTriples& t, std::size_t offset) {
    const std::size_t h = s.parties();
    const std::size_t n = words_of(x);
    BinarySharing masked(h);
    for (std::size_t p = 0; p < h; ++p) {
        masked[p].owner = x[p].owner;
        masked[p].session = s.id();
        masked[p].bits.resize(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            masked[p].bits[i] = x[p].bits[i] ^ t.a[p].bits[offset + i];
            masked[p].bits[n + i] = y[p].bits[i] ^ t.b[p].bits[offset + i];
        }
    }
    const auto de = s.open(masked, MessageKind::kAndOpen);
    BinarySharing z(h);
    for (std::size_t p = 0; p < h; ++p) {
        z[p].owner = x[p].owner;
        z[p].session = s.id();
        z[p].bits.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t d = de[i], e = de[n + i];
            std::uint64_t v = t.c[p].bits[offset + i] ^ (d & t.b[p].bits[offset + i]) ^ (e & t.a[p].bits[offset + i]);
            if (p == 0) v ^= d & e;
            z[p].bits[i] = v;
        }
    }
    return z;
}

// Bit i of the carry word is c_i; c_0 = 0 and c_{i+1} = c_i ^ ((x_i ^ c_i) & (y_i ^ c_i)).
BinarySharing add_at(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                     const BinaryTriples& t, std::size_t offset) {
    const std::size_t h = s.parties();
    const std::size_t n = words_of(x);
    BinarySharing carry(h), xc(h), yc(h);
    for (std::size_t p = 0; p < h; ++p) {
        carry[p] = BinaryShareVector{x[p].owner, s.id(), std::vector<std::uint64_t>(n, 0)};
        xc[p] = carry[p];
        yc[p] = carry[p];
    }
    for (std::size_t bit = 0; bit < kAdderAndGates; ++bit) {
        for (std::size_t p = 0; p < h; ++p)
            for (std::size_t i = 0; i < n; ++i) {
                xc[p].bits[i] = x[p].bits[i] ^ carry[p].bits[i];
                yc[p].bits[i] = y[p].bits[i] ^ carry[p].bits[i];
            }
        const auto g = and_at(s, xc, yc, t, offset + bit * n);
        for (std::size_t p = 0; p < h; ++p)
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint64_t next = ((carry[p].bits[i] ^ g[p].bits[i]) >> bit) & 1;
                carry[p].bits[i] |= next << (bit + 1);
            }
    }
    BinarySharing sum(h);
    for (std::size_t p = 0; p < h; ++p) {
        sum[p] = BinaryShareVector{x[p].owner, s.id(), std::vector<std::uint64_t>(n)};
        for (std::size_t i = 0; i < n; ++i) sum[p].bits[i] = x[p].bits[i] ^ y[p].bits[i] ^ carry[p].bits[i];
    }
    return sum;
}

void check_pair(const MpcSession& s, const BinarySharing& x, const BinarySharing& y) {
    s.check(x);
    s.check(y);
    require(words_of(x) == words_of(y), ErrorCode::kLengthMismatch, "operand lengths differ");
}

}  // namespace

BinarySharing binary_and_slice(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                               const BinaryTriples& triples, std::size_t offset) {
    check_pair(s, x, y);
    require(offset + words_of(x) <= triples.count, ErrorCode::kLengthMismatch, "triple slice out of range");
    return and_at(s, x, y, triples, offset);
}

BinarySharing binary_and(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                         BinaryTriples& triples) {
    check_pair(s, x, y);
    require_batch(triples.count, words_of(x), "binary_and");
    triples.consume("binary triples");
    return and_at(s, x, y, triples, 0);
}

BinarySharing binary_add(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                         BinaryTriples& triples) {
    check_pair(s, x, y);
    require_batch(triples.count, kAdderAndGates * words_of(x), "binary_add");
    triples.consume("binary triples");
    return add_at(s, x, y, triples, 0);
}

BinarySharing a2b(MpcSession& s, const ArithmeticSharing& x, BinaryTriples& triples) {
    s.check(x);
    const std::size_t h = s.parties();
    const std::size_t n = x[0].elems.size();
    require_batch(triples.count, (h - 1) * kAdderAndGates * n, "a2b");
    triples.consume("binary triples");

    auto own_pattern = [&](std::uint32_t p) {
        std::vector<std::uint64_t> words(n);
        for (std::size_t i = 0; i < n; ++i) words[i] = x[p].elems[i].value;
        return s.reshare(p, std::span<const std::uint64_t>(words));
    };
    BinarySharing acc = own_pattern(0);
    for (std::uint32_t p = 1; p < h; ++p) {
        acc = add_at(s, acc, own_pattern(p), triples, (p - 1) * kAdderAndGates * n);
    }
    return acc;
}

BinarySharing a2b(MpcSession& s, const ArithmeticSharing& x) {
    s.check(x);
    const std::size_t n = x[0].elems.size();
    auto own_pattern = [&](std::uint32_t p) {
        std::vector<std::uint64_t> words(n);
        for (std::size_t i = 0; i < n; ++i) words[i] = x[p].elems[i].value;
        return s.reshare(p, std::span<const std::uint64_t>(words));
    };
    // Same circuit as the batched overload, fetching one batch per adder.
    BinarySharing acc = own_pattern(0);
    for (std::uint32_t p = 1; p < s.parties(); ++p) {
        auto t = s.binary_triples(kAdderAndGates * n);
        acc = binary_add(s, acc, own_pattern(p), t);
    }
    return acc;
}

ArithmeticSharing b2a(MpcSession& s, const BinarySharing& x, BitConversionPairs& pairs, int width) {
    s.check(x);
    require(width >= 1 && width <= 64, ErrorCode::kInvalidArgument, "b2a width must be in [1, 64]");
    const std::size_t h = s.parties();
    const std::size_t n = words_of(x);
    const std::size_t w = static_cast<std::size_t>(width);
    require_batch(pairs.count, n * w, "b2a");
    pairs.consume("bit conversion pairs");

    BinarySharing masked(h);
    for (std::size_t p = 0; p < h; ++p) {
        masked[p] = BinaryShareVector{x[p].owner, s.id(), std::vector<std::uint64_t>(n * w)};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t b = 0; b < w; ++b)
                masked[p].bits[i * w + b] = ((x[p].bits[i] >> b) ^ pairs.r_bin[p].bits[i * w + b]) & 1;
    }
    const auto z = s.open(masked, MessageKind::kBitMaskOpen);

    ArithmeticSharing out(h);
    for (std::size_t p = 0; p < h; ++p) {
        out[p] = ArithmeticShareVector{x[p].owner, s.id(), std::vector<RingElement>(n)};
        for (std::size_t i = 0; i < n; ++i) {
            RingElement acc;
            for (std::size_t b = 0; b < w; ++b) {
                const std::uint64_t zb = z[i * w + b];
                const RingElement r = pairs.r_arith[p].elems[i * w + b];
                // [x_b] = [r] + z - 2 z [r]
                RingElement bit = zb ? RingElement(0) - r : r;
                if (p == 0) bit += RingElement(zb);
                acc += RingElement(std::uint64_t{1} << b) * bit;
            }
            out[p].elems[i] = acc;
        }
    }
    return out;
}

ArithmeticSharing b2a(MpcSession& s, const BinarySharing& x, int width) {
    s.check(x);
    auto pairs = s.bit_pairs(words_of(x) * static_cast<std::size_t>(width));
    return b2a(s, x, pairs, width);
}

}  // namespace hefl
