#include "hefl/message_log.hpp"

#include <algorithm>

#include "hefl/rng.hpp"

namespace hefl {

std::string ActorId::name() const {
    switch (role) {
        case ActorRole::kHospital: return "H" + std::to_string(index);
        case ActorRole::kEdge: return "E" + std::to_string(group) + "." + std::to_string(index);
        case ActorRole::kDealer: return "TTP";
        case ActorRole::kLedgerNode: return "B" + std::to_string(group) + ".n" + std::to_string(index);
        case ActorRole::kBmNode: return "BM.n" + std::to_string(index);
        case ActorRole::kCloud: return "cloud";
    }
    return "?";
}

const char* to_string(MessageKind kind) noexcept {
    switch (kind) {
        case MessageKind::kWeightShare: return "weight_share";
        case MessageKind::kInputShare: return "input_share";
        case MessageKind::kLabels: return "labels";
        case MessageKind::kCorrelated: return "correlated_randomness";
        case MessageKind::kBeaverOpen: return "beaver_open";
        case MessageKind::kAndOpen: return "and_open";
        case MessageKind::kBitMaskOpen: return "bitmask_open";
        case MessageKind::kTruncOpen: return "trunc_open";
        case MessageKind::kOutputShare: return "output_share";
        case MessageKind::kProbabilities: return "probabilities";
        case MessageKind::kModelUpdate: return "model_update";
        case MessageKind::kLedgerProposal: return "ledger_proposal";
        case MessageKind::kLedgerVote: return "ledger_vote";
        case MessageKind::kWeightProposal: return "weight_proposal";
    }
    return "unknown";
}

std::uint64_t fingerprint(std::span<const std::uint64_t> words) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc908ULL ^ words.size();
    for (std::uint64_t w : words) h = splitmix64(h ^ w);
    return h;
}

std::uint64_t fingerprint_bytes(std::span<const std::uint8_t> bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h ^ bytes.size());
}

void MessageLog::send(ActorId from, ActorId to, MessageKind kind,
                      std::span<const std::uint64_t> payload) {
    send_sized(from, to, kind, payload.size() * sizeof(std::uint64_t), fingerprint(payload));
}

void MessageLog::send_sized(ActorId from, ActorId to, MessageKind kind, std::uint64_t bytes,
                            std::uint64_t digest) {
    records_.push_back(MessageRecord{++tick_, from, to, kind, bytes, digest});
}

std::size_t MessageLog::count(MessageKind kind) const {
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                  [kind](const MessageRecord& r) { return r.kind == kind; }));
}

std::uint64_t MessageLog::total_bytes() const {
    std::uint64_t total = 0;
    for (const auto& r : records_) total += r.bytes;
    return total;
}

std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> MessageLog::totals_by_kind() const {
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> out;
    for (const auto& r : records_) {
        auto& slot = out[to_string(r.kind)];
        slot.first += 1;
        slot.second += r.bytes;
    }
    return out;
}

bool MessageLog::contains_digest(std::uint64_t digest) const {
    return std::any_of(records_.begin(), records_.end(),
                       [digest](const MessageRecord& r) { return r.digest == digest; });
}

}  // namespace hefl
