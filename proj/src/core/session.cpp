#include "hefl/session.hpp"

#include <string>
#include <type_traits>

namespace hefl {

MpcSession::MpcSession(std::size_t parties, Dealer& dealer, FixedPointCodec codec, SessionId id,
                       MessageLog* log, std::vector<ActorId> actors)
    : parties_(parties),
      dealer_(&dealer),
      codec_(codec),
      id_(id),
      log_(log),
      actors_(std::move(actors)) {
    require(parties >= 2, ErrorCode::kDegenerateParties, "a session needs at least 2 parties");
    require(dealer.parties() == parties, ErrorCode::kInvalidArgument, "dealer serves a different party count");
    if (actors_.empty()) {
        for (std::uint32_t p = 0; p < parties; ++p) actors_.push_back(ActorId::hospital(p));
    }
    require(actors_.size() == parties, ErrorCode::kInvalidArgument, "one actor per party required");
    zero_ = ZeroSharer(parties, dealer);
}

void MpcSession::check(const ArithmeticSharing& shares) const {
    require(shares.size() == parties_, ErrorCode::kLengthMismatch, "wrong number of party shares");
    for (const auto& s : shares) {
        require(s.session == id_, ErrorCode::kSessionMismatch,
                "share from session " + std::to_string(s.session) + " used in session " + std::to_string(id_));
        require(s.elems.size() == shares[0].elems.size(), ErrorCode::kLengthMismatch, "share lengths differ");
    }
}

void MpcSession::check(const BinarySharing& shares) const {
    require(shares.size() == parties_, ErrorCode::kLengthMismatch, "wrong number of party shares");
    for (const auto& s : shares) {
        require(s.session == id_, ErrorCode::kSessionMismatch,
                "share from session " + std::to_string(s.session) + " used in session " + std::to_string(id_));
        require(s.bits.size() == shares[0].bits.size(), ErrorCode::kLengthMismatch, "share lengths differ");
    }
}

std::vector<RingElement> MpcSession::open(const ArithmeticSharing& shares, MessageKind kind) {
    check(shares);
    if (log_ != nullptr) {
        for (std::uint32_t p = 0; p < parties_; ++p) {
            std::span<const std::uint64_t> words(reinterpret_cast<const std::uint64_t*>(shares[p].elems.data()),
                                                 shares[p].elems.size());
            const std::uint64_t fp = fingerprint(words);
            for (std::uint32_t q = 0; q < parties_; ++q)
                if (q != p) log_->send_sized(actors_[p], actors_[q], kind, words.size() * 8, fp);
        }
    }
    opened_[static_cast<std::size_t>(kind)] += shares[0].elems.size();
    return reconstruct_arithmetic(shares);
}

std::vector<std::uint64_t> MpcSession::open(const BinarySharing& shares, MessageKind kind) {
    check(shares);
    if (log_ != nullptr) {
        for (std::uint32_t p = 0; p < parties_; ++p) {
            const std::uint64_t fp = fingerprint(shares[p].bits);
            for (std::uint32_t q = 0; q < parties_; ++q)
                if (q != p) log_->send_sized(actors_[p], actors_[q], kind, shares[p].bits.size() * 8, fp);
        }
    }
    opened_[static_cast<std::size_t>(kind)] += shares[0].bits.size();
    return reconstruct_binary(shares);
}

std::uint64_t MpcSession::opened(MessageKind kind) const { return opened_[static_cast<std::size_t>(kind)]; }

template <class Batch>
void MpcSession::stamp_and_log(Batch& batch, std::size_t words_per_item) {
    auto stamp = [this](auto& sharing) {
        for (auto& s : sharing) s.session = id_;
    };
    if constexpr (std::is_same_v<Batch, BeaverTriples> || std::is_same_v<Batch, BinaryTriples>) {
        stamp(batch.a);
        stamp(batch.b);
        stamp(batch.c);
    } else if constexpr (std::is_same_v<Batch, BitConversionPairs>) {
        stamp(batch.r_arith);
        stamp(batch.r_bin);
    } else {
        stamp(batch.r);
        stamp(batch.r_trunc);
        stamp(batch.r_low);
        stamp(batch.carry_triples.a);
        stamp(batch.carry_triples.b);
        stamp(batch.carry_triples.c);
        stamp(batch.carry_pairs.r_arith);
        stamp(batch.carry_pairs.r_bin);
    }
    if (log_ != nullptr) {
        for (std::uint32_t p = 0; p < parties_; ++p)
            log_->send_sized(ActorId::dealer(), actors_[p], MessageKind::kCorrelated,
                             batch.count * words_per_item * 8);
    }
}

BeaverTriples MpcSession::beaver(std::size_t count) {
    auto t = dealer_->beaver(count);
    stamp_and_log(t, 3);
    return t;
}

BinaryTriples MpcSession::binary_triples(std::size_t count) {
    auto t = dealer_->binary_triples(count);
    stamp_and_log(t, 3);
    return t;
}

BitConversionPairs MpcSession::bit_pairs(std::size_t count) {
    auto p = dealer_->bit_pairs(count);
    stamp_and_log(p, 2);
    return p;
}

TruncationPairs MpcSession::trunc_pairs(std::size_t count, int shift) {
    auto p = dealer_->trunc_pairs(count, shift);
    stamp_and_log(p, 2 + 1 + 3 * static_cast<std::size_t>(shift - 1) + 2);
    return p;
}

ArithmeticSharing MpcSession::reshare(std::uint32_t holder, std::span<const RingElement> secret) {
    require(holder < parties_, ErrorCode::kInvalidArgument, "holder outside party range");
    const std::uint64_t nonce = mix3(id_, nonce_++, 0xa1);
    ArithmeticSharing out(parties_);
    for (std::uint32_t p = 0; p < parties_; ++p) {
        out[p].owner = PartyId{p};
        out[p].session = id_;
        out[p].elems = zero_.arithmetic(p, nonce, secret.size());
    }
    for (std::size_t i = 0; i < secret.size(); ++i) out[holder].elems[i] += secret[i];
    return out;
}

BinarySharing MpcSession::reshare(std::uint32_t holder, std::span<const std::uint64_t> secret) {
    require(holder < parties_, ErrorCode::kInvalidArgument, "holder outside party range");
    const std::uint64_t nonce = mix3(id_, nonce_++, 0xb1);
    BinarySharing out(parties_);
    for (std::uint32_t p = 0; p < parties_; ++p) {
        out[p].owner = PartyId{p};
        out[p].session = id_;
        out[p].bits = zero_.binary(p, nonce, secret.size());
    }
    for (std::size_t i = 0; i < secret.size(); ++i) out[holder].bits[i] ^= secret[i];
    return out;
}

}  // namespace hefl
