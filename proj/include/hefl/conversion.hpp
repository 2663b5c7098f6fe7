#pragma once

#include "hefl/session.hpp"
#include "hefl/sharing.hpp"

namespace hefl {

/// Secure AND on XOR-shared words, one triple per word.
BinarySharing binary_and(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                         BinaryTriples& triples);

/// AND gate on triples [offset, offset + n) of a batch the caller has
/// already consumed.
BinarySharing binary_and_slice(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                               const BinaryTriples& triples, std::size_t offset);

/// Ripple-carry adder over XOR-shared 64-bit words (mod 2^64).
/// Consumes 63 * n binary triples for n words.
BinarySharing binary_add(MpcSession& s, const BinarySharing& x, const BinarySharing& y,
                         BinaryTriples& triples);

inline constexpr std::size_t kAdderAndGates = 63;

/// Arithmetic to binary: each party binary-shares its own arithmetic share,
/// then the h patterns are summed by h-1 ripple-carry additions.
BinarySharing a2b(MpcSession& s, const ArithmeticSharing& x, BinaryTriples& triples);
BinarySharing a2b(MpcSession& s, const ArithmeticSharing& x);

/// Binary to arithmetic for the low `width` bits of each word. Uses one
/// bit-conversion pair per bit: [x_b] = [r] + z - 2 z [r] with z = x_b ^ r opened.
ArithmeticSharing b2a(MpcSession& s, const BinarySharing& x, BitConversionPairs& pairs,
                      int width = 64);
ArithmeticSharing b2a(MpcSession& s, const BinarySharing& x, int width = 64);

}  // namespace hefl
