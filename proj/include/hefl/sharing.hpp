#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hefl/error.hpp"
#include "hefl/ring.hpp"
#include "hefl/rng.hpp"

namespace hefl {

struct PartyId {
    std::uint32_t index = 0;
    friend bool operator==(PartyId, PartyId) = default;
};

using SessionId = std::uint64_t;

/// One party's additive share of a vector secret: secret = sum over parties (mod 2^64).
struct ArithmeticShareVector {
    PartyId owner;
    SessionId session = 0;
    std::vector<RingElement> elems;
};

/// One party's XOR share of a vector of 64-bit patterns.
struct BinaryShareVector {
    PartyId owner;
    SessionId session = 0;
    std::vector<std::uint64_t> bits;
};

/// All parties' shares of one secret, indexed by party.
using ArithmeticSharing = std::vector<ArithmeticShareVector>;
using BinarySharing = std::vector<BinaryShareVector>;

ArithmeticSharing share_arithmetic(std::span<const RingElement> secret, std::size_t parties,
                                   Rng& rng, SessionId session = 0);
std::vector<RingElement> reconstruct_arithmetic(std::span<const ArithmeticShareVector> shares);

BinarySharing share_binary(std::span<const std::uint64_t> secret, std::size_t parties, Rng& rng,
                           SessionId session = 0);
std::vector<std::uint64_t> reconstruct_binary(std::span<const BinaryShareVector> shares);

/// Sharing in which party `holder` owns the secret and everyone else holds zero.
ArithmeticSharing trivial_arithmetic(std::span<const RingElement> secret, std::size_t parties,
                                     std::uint32_t holder, SessionId session = 0);

// ---------------------------------------------------------------------------
// Correlated randomness

/// Consumption flag shared by every dealer-issued batch. Moving a batch
/// transfers the flag and marks the source as consumed.
class SingleUse {
public:
    SingleUse() = default;
    SingleUse(const SingleUse&) = delete;
    SingleUse& operator=(const SingleUse&) = delete;
    SingleUse(SingleUse&& other) noexcept : consumed_(other.consumed_) { other.consumed_ = true; }
    SingleUse& operator=(SingleUse&& other) noexcept {
        consumed_ = other.consumed_;
        other.consumed_ = true;
        return *this;
    }

    bool consumed() const noexcept { return consumed_; }
    /// Throws Error(kSingleUseViolation) on the second call.
    void consume(const char* what);

private:
    bool consumed_ = false;
};

/// Per-element ([a], [b], [c]) with c = a * b.
struct BeaverTriples : SingleUse {
    std::size_t count = 0;
    ArithmeticSharing a, b, c;
};

/// Per-word XOR-shared (a, b, c) with c = a & b.
struct BinaryTriples : SingleUse {
    std::size_t count = 0;
    BinarySharing a, b, c;
};

/// Per-bit ([r], <r>) with r in {0, 1}.
struct BitConversionPairs : SingleUse {
    std::size_t count = 0;
    ArithmeticSharing r_arith;
    BinarySharing r_bin;
};

/// Per-element ([r], [r >> shift], <r mod 2^shift>) with 0 <= r < 2^63, plus
/// the (shift - 1) AND triples and one bit pair per element that the exact
/// carry correction consumes.
struct TruncationPairs : SingleUse {
    std::size_t count = 0;
    int shift = 0;
    ArithmeticSharing r, r_trunc;
    BinarySharing r_low;
    BinaryTriples carry_triples;
    BitConversionPairs carry_pairs;
};

BeaverTriples dealer_beaver(std::size_t parties, std::size_t count, Rng& rng);
BinaryTriples dealer_binary_triple(std::size_t parties, std::size_t count, Rng& rng);
BitConversionPairs dealer_bit_pair(std::size_t parties, std::size_t count, Rng& rng);
TruncationPairs dealer_trunc_pair(std::size_t parties, std::size_t count, int shift, Rng& rng);

/// Defining-relation checks, used by tests and by debug builds on issuance.
bool satisfies_relation(const BeaverTriples& t);
bool satisfies_relation(const BinaryTriples& t);
bool satisfies_relation(const BitConversionPairs& p);
bool satisfies_relation(const TruncationPairs& p);

struct CorrelatedCounts {
    std::uint64_t beaver = 0;
    std::uint64_t binary_triples = 0;
    std::uint64_t bit_pairs = 0;
    std::uint64_t trunc_pairs = 0;

    CorrelatedCounts& operator+=(const CorrelatedCounts& o) {
        beaver += o.beaver;
        binary_triples += o.binary_triples;
        bit_pairs += o.bit_pairs;
        trunc_pairs += o.trunc_pairs;
        return *this;
    }
    friend bool operator==(const CorrelatedCounts&, const CorrelatedCounts&) = default;
};

struct DealerState {
    std::uint64_t seed = 0;
    CorrelatedCounts issued;
};

/// Trusted third party. Issuance is serialized through one instance and is a
/// pure function of the seed and the request sequence.
class Dealer {
public:
    Dealer(std::size_t parties, std::uint64_t seed);

    std::size_t parties() const noexcept { return parties_; }
    const DealerState& state() const noexcept { return state_; }

    /// Caps total issuance; requests past the cap throw Error(kDealerExhausted).
    void set_budget(const CorrelatedCounts& budget) { budget_ = budget; }
    const std::optional<CorrelatedCounts>& budget() const noexcept { return budget_; }

    BeaverTriples beaver(std::size_t count);
    BinaryTriples binary_triples(std::size_t count);
    BitConversionPairs bit_pairs(std::size_t count);
    TruncationPairs trunc_pairs(std::size_t count, int shift);

    /// Pairwise seed shared by parties i and j, distributed once at session setup.
    std::uint64_t pairwise_seed(std::uint32_t i, std::uint32_t j) const;

private:
    void charge(std::uint64_t CorrelatedCounts::*field, std::size_t count, const char* what);

    std::size_t parties_;
    DealerState state_;
    std::optional<CorrelatedCounts> budget_;
    Rng rng_;
};

/// Pseudorandom zero-sharing from pairwise seeds: every party derives its
/// share locally and the shares sum (or XOR) to zero.
class ZeroSharer {
public:
    ZeroSharer() = default;
    ZeroSharer(std::size_t parties, const Dealer& dealer);

    std::size_t parties() const noexcept { return parties_; }

    std::vector<RingElement> arithmetic(std::uint32_t party, std::uint64_t nonce,
                                        std::size_t count) const;
    std::vector<std::uint64_t> binary(std::uint32_t party, std::uint64_t nonce,
                                      std::size_t count) const;

private:
    std::size_t parties_ = 0;
    std::vector<std::uint64_t> seeds_;  // parties x parties, symmetric
};

}  // namespace hefl
