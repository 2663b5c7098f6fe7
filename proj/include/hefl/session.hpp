#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hefl/message_log.hpp"
#include "hefl/ring.hpp"
#include "hefl/sharing.hpp"

namespace hefl {

/// The h parties of one secure computation together with their dealer and
/// message bus. The simulator holds every party's state in one process; all
/// cross-party data flow goes through open() and the dealer fetches, which
/// are recorded on the log.
class MpcSession {
public:
    MpcSession(std::size_t parties, Dealer& dealer, FixedPointCodec codec, SessionId id,
               MessageLog* log = nullptr, std::vector<ActorId> actors = {});

    std::size_t parties() const noexcept { return parties_; }
    const FixedPointCodec& codec() const noexcept { return codec_; }
    int frac_bits() const noexcept { return codec_.frac_bits; }
    SessionId id() const noexcept { return id_; }
    Dealer& dealer() noexcept { return *dealer_; }
    MessageLog* log() noexcept { return log_; }
    ActorId actor(std::uint32_t party) const { return actors_.at(party); }

    /// Every party broadcasts its share; all learn the sum.
    std::vector<RingElement> open(const ArithmeticSharing& shares, MessageKind kind);
    /// Every party broadcasts its share; all learn the XOR.
    std::vector<std::uint64_t> open(const BinarySharing& shares, MessageKind kind);

    BeaverTriples beaver(std::size_t count);
    BinaryTriples binary_triples(std::size_t count);
    BitConversionPairs bit_pairs(std::size_t count);
    TruncationPairs trunc_pairs(std::size_t count, int shift);

    /// Fresh sharing of a value known to `holder`: the trivial sharing plus a
    /// pseudorandom zero-share. Needs no communication.
    ArithmeticSharing reshare(std::uint32_t holder, std::span<const RingElement> secret);
    BinarySharing reshare(std::uint32_t holder, std::span<const std::uint64_t> secret);

    /// Number of ring / word elements opened so far, by message kind.
    std::uint64_t opened(MessageKind kind) const;

    void check(const ArithmeticSharing& shares) const;
    void check(const BinarySharing& shares) const;

private:
    template <class Batch>
    void stamp_and_log(Batch& batch, std::size_t words_per_item);

    std::size_t parties_;
    Dealer* dealer_;
    FixedPointCodec codec_;
    SessionId id_;
    MessageLog* log_;
    std::vector<ActorId> actors_;
    ZeroSharer zero_;
    std::uint64_t nonce_ = 0;
    std::array<std::uint64_t, 16> opened_{};
};

}  // namespace hefl
