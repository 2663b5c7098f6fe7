#include "hefl/sharing.hpp"

#include <string>

namespace hefl {

namespace {

void require_parties(std::size_t parties) {
    require(parties >= 2, ErrorCode::kDegenerateParties,
            "secret sharing needs at least 2 parties, got " + std::to_string(parties));
}

ArithmeticSharing empty_arith(std::size_t parties, std::size_t n, SessionId session) {
    ArithmeticSharing out(parties);
    for (std::size_t p = 0; p < parties; ++p) {
        out[p].owner = PartyId{static_cast<std::uint32_t>(p)};
        out[p].session = session;
        out[p].elems.resize(n);
    }
    return out;
}

BinarySharing empty_bin(std::size_t parties, std::size_t n, SessionId session) {
    BinarySharing out(parties);
    for (std::size_t p = 0; p < parties; ++p) {
        out[p].owner = PartyId{static_cast<std::uint32_t>(p)};
        out[p].session = session;
        out[p].bits.resize(n);
    }
    return out;
}

// Additive sharing of `secret` into the prepared slots.
void fill_arith(ArithmeticSharing& out, std::span<const RingElement> secret, Rng& rng) {
    const std::size_t parties = out.size();
    for (std::size_t i = 0; i < secret.size(); ++i) {
        RingElement rest = secret[i];
        for (std::size_t p = 0; p + 1 < parties; ++p) {
            RingElement r(rng.next_u64());
            out[p].elems[i] = r;
            rest -= r;
        }
        out[parties - 1].elems[i] = rest;
    }
}

void fill_bin(BinarySharing& out, std::span<const std::uint64_t> secret, Rng& rng) {
    const std::size_t parties = out.size();
    for (std::size_t i = 0; i < secret.size(); ++i) {
        std::uint64_t rest = secret[i];
        for (std::size_t p = 0; p + 1 < parties; ++p) {
            std::uint64_t r = rng.next_u64();
            out[p].bits[i] = r;
            rest ^= r;
        }
        out[parties - 1].bits[i] = rest;
    }
}

template <class ShareVec>
std::size_t check_shares(std::span<const ShareVec> shares, std::size_t (*len)(const ShareVec&)) {
    require(!shares.empty(), ErrorCode::kInvalidArgument, "no shares to reconstruct");
    const std::size_t n = len(shares[0]);
    for (const auto& s : shares) {
        require(s.session == shares[0].session, ErrorCode::kSessionMismatch,
                "shares belong to different sessions");
        require(len(s) == n, ErrorCode::kLengthMismatch, "share vectors differ in length");
    }
    return n;
}

}  // namespace

ArithmeticSharing share_arithmetic(std::span<const RingElement> secret, std::size_t parties, Rng& rng,
                                   SessionId session) {
    require_parties(parties);
    auto out = empty_arith(parties, secret.size(), session);
    fill_arith(out, secret, rng);
    return out;
}

std::vector<RingElement> reconstruct_arithmetic(std::span<const ArithmeticShareVector> shares) {
    const std::size_t n = check_shares<ArithmeticShareVector>(
        shares, [](const ArithmeticShareVector& s) { return s.elems.size(); });
    std::vector<RingElement> out(n);
    for (const auto& s : shares)
        for (std::size_t i = 0; i < n; ++i) out[i] += s.elems[i];
    return out;
}

BinarySharing share_binary(std::span<const std::uint64_t> secret, std::size_t parties, Rng& rng,
                           SessionId session) {
    require_parties(parties);
    auto out = empty_bin(parties, secret.size(), session);
    fill_bin(out, secret, rng);
    return out;
}

std::vector<std::uint64_t> reconstruct_binary(std::span<const BinaryShareVector> shares) {
    const std::size_t n = check_shares<BinaryShareVector>(
        shares, [](const BinaryShareVector& s) { return s.bits.size(); });
    std::vector<std::uint64_t> out(n, 0);
    for (const auto& s : shares)
        for (std::size_t i = 0; i < n; ++i) out[i] ^= s.bits[i];
    return out;
}

ArithmeticSharing trivial_arithmetic(std::span<const RingElement> secret, std::size_t parties,
                                     std::uint32_t holder, SessionId session) {
    require_parties(parties);
    require(holder < parties, ErrorCode::kInvalidArgument, "holder outside party range");
    auto out = empty_arith(parties, secret.size(), session);
    out[holder].elems.assign(secret.begin(), secret.end());
    return out;
}

void SingleUse::consume(const char* what) {
    if (consumed_) {
        fail(ErrorCode::kSingleUseViolation, std::string(what) + " already consumed");
    }
    consumed_ = true;
}

// ---------------------------------------------------------------------------

BeaverTriples dealer_beaver(std::size_t parties, std::size_t count, Rng& rng) {
    require_parties(parties);
    BeaverTriples t;
    t.count = count;
    std::vector<RingElement> a(count), b(count), c(count);
    for (std::size_t i = 0; i < count; ++i) {
        a[i] = RingElement(rng.next_u64());
        b[i] = RingElement(rng.next_u64());
        c[i] = a[i] * b[i];
    }
    t.a = share_arithmetic(a, parties, rng);
    t.b = share_arithmetic(b, parties, rng);
    t.c = share_arithmetic(c, parties, rng);
    return t;
}

BinaryTriples dealer_binary_triple(std::size_t parties, std::size_t count, Rng& rng) {
    require_parties(parties);
    BinaryTriples t;
    t.count = count;
    std::vector<std::uint64_t> a(count), b(count), c(count);
    for (std::size_t i = 0; i < count; ++i) {
        a[i] = rng.next_u64();
        b[i] = rng.next_u64();
        c[i] = a[i] & b[i];
    }
    t.a = share_binary(a, parties, rng);
    t.b = share_binary(b, parties, rng);
    t.c = share_binary(c, parties, rng);
    return t;
}

BitConversionPairs dealer_bit_pair(std::size_t parties, std::size_t count, Rng& rng) {
    require_parties(parties);
    BitConversionPairs p;
    p.count = count;
    std::vector<RingElement> ra(count);
    std::vector<std::uint64_t> rb(count);
    for (std::size_t i = 0; i < count; ++i) {
        rb[i] = rng.next_u64() & 1;
        ra[i] = RingElement(rb[i]);
    }
    p.r_arith = share_arithmetic(ra, parties, rng);
    p.r_bin = share_binary(rb, parties, rng);
    return p;
}

TruncationPairs dealer_trunc_pair(std::size_t parties, std::size_t count, int shift, Rng& rng) {
    require_parties(parties);
    require(shift > 0 && shift < 63, ErrorCode::kInvalidArgument, "truncation shift out of range");
    TruncationPairs p;
    p.count = count;
    p.shift = shift;
    std::vector<RingElement> r(count), rt(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t v = rng.next_u64() >> 1;  // [0, 2^63)
        r[i] = RingElement(v);
        rt[i] = RingElement(v >> shift);
    }
    std::vector<std::uint64_t> low(count);
    for (std::size_t i = 0; i < count; ++i) low[i] = r[i].value & ((std::uint64_t{1} << shift) - 1);
    p.r = share_arithmetic(r, parties, rng);
    p.r_trunc = share_arithmetic(rt, parties, rng);
    p.r_low = share_binary(low, parties, rng);
    p.carry_triples = dealer_binary_triple(parties, static_cast<std::size_t>(shift - 1) * count, rng);
    p.carry_pairs = dealer_bit_pair(parties, count, rng);
    return p;
}

bool satisfies_relation(const BeaverTriples& t) {
    auto a = reconstruct_arithmetic(t.a), b = reconstruct_arithmetic(t.b), c = reconstruct_arithmetic(t.c);
    if (a.size() != t.count || b.size() != t.count || c.size() != t.count) return false;
    for (std::size_t i = 0; i < t.count; ++i)
        if (c[i] != a[i] * b[i]) return false;
    return true;
}

bool satisfies_relation(const BinaryTriples& t) {
    auto a = reconstruct_binary(t.a), b = reconstruct_binary(t.b), c = reconstruct_binary(t.c);
    if (a.size() != t.count || b.size() != t.count || c.size() != t.count) return false;
    for (std::size_t i = 0; i < t.count; ++i)
        if (c[i] != (a[i] & b[i])) return false;
    return true;
}

bool satisfies_relation(const BitConversionPairs& p) {
    auto ra = reconstruct_arithmetic(p.r_arith);
    auto rb = reconstruct_binary(p.r_bin);
    if (ra.size() != p.count || rb.size() != p.count) return false;
    for (std::size_t i = 0; i < p.count; ++i)
        if (rb[i] > 1 || ra[i].value != rb[i]) return false;
    return true;
}

bool satisfies_relation(const TruncationPairs& p) {
    auto r = reconstruct_arithmetic(p.r), rt = reconstruct_arithmetic(p.r_trunc);
    auto low = reconstruct_binary(p.r_low);
    if (r.size() != p.count || rt.size() != p.count || low.size() != p.count) return false;
    const std::uint64_t mask = (std::uint64_t{1} << p.shift) - 1;
    for (std::size_t i = 0; i < p.count; ++i) {
        if (r[i].msb() || rt[i] != ring_shift_signed(r[i], p.shift)) return false;
        if (low[i] != (r[i].value & mask)) return false;
    }
    return p.carry_triples.count == static_cast<std::size_t>(p.shift - 1) * p.count &&
           p.carry_pairs.count == p.count && satisfies_relation(p.carry_triples) &&
           satisfies_relation(p.carry_pairs);
}

// ---------------------------------------------------------------------------

Dealer::Dealer(std::size_t parties, std::uint64_t seed)
    : parties_(parties), state_{seed, {}}, rng_(seed) {
    require_parties(parties);
}

void Dealer::charge(std::uint64_t CorrelatedCounts::*field, std::size_t count, const char* what) {
    const std::uint64_t next = state_.issued.*field + count;
    if (budget_ && next > (*budget_).*field) {
        fail(ErrorCode::kDealerExhausted,
             std::string("dealer budget exhausted for ") + what + ": requested " + std::to_string(count) +
                 ", remaining " + std::to_string((*budget_).*field - state_.issued.*field));
    }
    state_.issued.*field = next;
}

#ifndef NDEBUG
#define HEFL_CHECK_ISSUE(obj) \
    if (!satisfies_relation(obj)) fail(ErrorCode::kInternal, "dealer issued an inconsistent object")
#else
#define HEFL_CHECK_ISSUE(obj) (void)0
#endif

BeaverTriples Dealer::beaver(std::size_t count) {
    charge(&CorrelatedCounts::beaver, count, "beaver triples");
    auto t = dealer_beaver(parties_, count, rng_);
    HEFL_CHECK_ISSUE(t);
    return t;
}

BinaryTriples Dealer::binary_triples(std::size_t count) {
    charge(&CorrelatedCounts::binary_triples, count, "binary triples");
    auto t = dealer_binary_triple(parties_, count, rng_);
    HEFL_CHECK_ISSUE(t);
    return t;
}

BitConversionPairs Dealer::bit_pairs(std::size_t count) {
    charge(&CorrelatedCounts::bit_pairs, count, "bit conversion pairs");
    auto p = dealer_bit_pair(parties_, count, rng_);
    HEFL_CHECK_ISSUE(p);
    return p;
}

TruncationPairs Dealer::trunc_pairs(std::size_t count, int shift) {
    charge(&CorrelatedCounts::trunc_pairs, count, "truncation pairs");
    auto p = dealer_trunc_pair(parties_, count, shift, rng_);
    HEFL_CHECK_ISSUE(p);
    return p;
}

#undef HEFL_CHECK_ISSUE

std::uint64_t Dealer::pairwise_seed(std::uint32_t i, std::uint32_t j) const {
    if (i > j) std::swap(i, j);
    return mix3(state_.seed ^ 0x7a65726fULL, i, j);
}

ZeroSharer::ZeroSharer(std::size_t parties, const Dealer& dealer)
    : parties_(parties), seeds_(parties * parties, 0) {
    for (std::uint32_t i = 0; i < parties; ++i)
        for (std::uint32_t j = 0; j < parties; ++j)
            if (i != j) seeds_[i * parties + j] = dealer.pairwise_seed(i, j);
}

std::vector<RingElement> ZeroSharer::arithmetic(std::uint32_t party, std::uint64_t nonce,
                                                std::size_t count) const {
    std::vector<RingElement> out(count);
    for (std::uint32_t j = 0; j < parties_; ++j) {
        if (j == party) continue;
        const std::uint64_t seed = seeds_[party * parties_ + j];
        for (std::size_t k = 0; k < count; ++k) {
            RingElement r(mix3(seed, nonce, k));
            // The lower-indexed party adds, the higher subtracts: pairs cancel.
            if (party < j) out[k] += r;
            else out[k] -= r;
        }
    }
    return out;
}

std::vector<std::uint64_t> ZeroSharer::binary(std::uint32_t party, std::uint64_t nonce,
                                              std::size_t count) const {
    std::vector<std::uint64_t> out(count, 0);
    for (std::uint32_t j = 0; j < parties_; ++j) {
        if (j == party) continue;
        const std::uint64_t seed = seeds_[party * parties_ + j];
        for (std::size_t k = 0; k < count; ++k) out[k] ^= mix3(seed, ~nonce, k);
    }
    return out;
}

}  // namespace hefl
