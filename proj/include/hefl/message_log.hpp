#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hefl {

enum class ActorRole : std::uint8_t {
    kHospital,
    kEdge,
    kDealer,
    kLedgerNode,   // node of a hospital's private chain
    kBmNode,       // node of the multi-institution chain
    kCloud,        // submitter for ensemble tuning
};

struct ActorId {
    ActorRole role = ActorRole::kHospital;
    std::uint32_t group = 0;  // hospital index for edges / ledger nodes
    std::uint32_t index = 0;

    static ActorId hospital(std::uint32_t i) { return {ActorRole::kHospital, i, i}; }
    static ActorId edge(std::uint32_t h, std::uint32_t e) { return {ActorRole::kEdge, h, e}; }
    static ActorId dealer() { return {ActorRole::kDealer, 0, 0}; }
    static ActorId ledger_node(std::uint32_t h, std::uint32_t n) { return {ActorRole::kLedgerNode, h, n}; }
    static ActorId bm_node(std::uint32_t n) { return {ActorRole::kBmNode, 0, n}; }
    static ActorId cloud() { return {ActorRole::kCloud, 0, 0}; }

    std::string name() const;
    friend bool operator==(const ActorId&, const ActorId&) = default;
};

enum class MessageKind : std::uint8_t {
    kWeightShare,       // MO -> party: arithmetic share of model weights
    kInputShare,        // DO -> party: arithmetic share of evaluation inputs
    kLabels,            // DO -> MO, MO -> BM: tuning labels
    kCorrelated,        // dealer -> party: triples / bit pairs / truncation pairs
    kBeaverOpen,        // share of epsilon / delta
    kAndOpen,           // share of masked AND-gate inputs
    kBitMaskOpen,       // share of masked bit during B2A
    kTruncOpen,         // share of masked value during truncation
    kOutputShare,       // party -> MO: share of logits
    kProbabilities,     // MO -> BM: decrypted probability matrix
    kModelUpdate,       // edge <-> central server, inside one hospital
    kLedgerProposal,    // submitter -> ledger node
    kLedgerVote,        // ledger node broadcast of (node_id, h_i)
    kWeightProposal,    // cloud -> BM node
};

const char* to_string(MessageKind kind) noexcept;

struct MessageRecord {
    std::uint64_t tick = 0;
    ActorId sender;
    ActorId receiver;
    MessageKind kind = MessageKind::kWeightShare;
    std::uint64_t bytes = 0;
    std::uint64_t digest = 0;  // content fingerprint for privacy audits
};

/// 64-bit content fingerprint; not cryptographic.
std::uint64_t fingerprint(std::span<const std::uint64_t> words) noexcept;
std::uint64_t fingerprint_bytes(std::span<const std::uint8_t> bytes) noexcept;

/// Totally ordered record of simulated traffic. Each message advances the tick.
class MessageLog {
public:
    void send(ActorId from, ActorId to, MessageKind kind, std::span<const std::uint64_t> payload);
    void send_sized(ActorId from, ActorId to, MessageKind kind, std::uint64_t bytes,
                    std::uint64_t digest = 0);

    std::uint64_t tick() const noexcept { return tick_; }
    const std::vector<MessageRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }

    std::size_t count(MessageKind kind) const;
    std::uint64_t total_bytes() const;
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> totals_by_kind() const;

    bool contains_digest(std::uint64_t digest) const;

private:
    std::uint64_t tick_ = 0;
    std::vector<MessageRecord> records_;
};

}  // namespace hefl
