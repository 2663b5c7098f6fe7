#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hefl/digest.hpp"
#include "hefl/ensemble.hpp"
#include "hefl/error.hpp"
#include "hefl/message_log.hpp"
#include "hefl/neural.hpp"

namespace hefl {

/// A local or global model submitted for verification.
struct ModelRecord {
    std::string model_id;
    Digest spec_hash{};
    /// When set, `content` is the SHA-256 of the model bytes rather than the bytes.
    bool hash_only = false;
    Bytes content;
    std::string submitter;
};

/// Tuned ensemble weights and the global models they refer to.
struct WeightRecord {
    std::vector<std::string> gm_ids;
    std::vector<double> alpha;
    double accuracy = 0.0;
    std::string submitter;
};

using BlockPayload = std::variant<ModelRecord, WeightRecord>;

/// Field-ordered little-endian encoding: tag byte, u32-prefixed UTF-8
/// strings, u64-prefixed blobs, IEEE-754 binary64 for reals.
Bytes canonical_serialize(const BlockPayload& payload);
/// Strict inverse of canonical_serialize; throws Error(kIo).
BlockPayload parse_payload(std::span<const std::uint8_t> bytes);

/// Model id, or the GM ids joined with '|'.
std::string payload_id(const BlockPayload& payload);
const char* payload_type(const BlockPayload& payload);

/// SHA-256(bytes || id).
Digest compute_model_hash(std::span<const std::uint8_t> bytes, std::string_view id);
/// compute_model_hash(canonical_serialize(payload), payload_id(payload)).
Digest payload_hash(const BlockPayload& payload);

/// Canonical model bytes: u32 layer count, then per layer u64-counted
/// weight and bias arrays of fixed-point ring values (u64 LE).
Bytes encode_model_bytes(const ModelParams& params, const FixedPointCodec& codec);
ModelRecord make_model_record(const ModelParams& params, const FixedPointCodec& codec,
                              std::string submitter, bool hash_only = false);

struct Block {
    std::uint64_t height = 0;
    Digest previous_hash{};
    Digest payload_hash{};
    std::uint64_t timestamp = 0;  // simulated tick
    Digest block_hash{};
    BlockPayload payload;
};

/// SHA-256(height || previous_hash || payload_hash || timestamp).
Digest compute_block_hash(std::uint64_t height, const Digest& previous, const Digest& payload,
                          std::uint64_t timestamp);

struct ChainValidation {
    bool valid = true;
    std::optional<std::uint64_t> first_bad_height;
    std::string reason;
};

class Chain {
public:
    explicit Chain(std::string name = {}) : name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    std::vector<Block>& mutable_blocks() noexcept { return blocks_; }
    std::size_t size() const noexcept { return blocks_.size(); }
    bool empty() const noexcept { return blocks_.empty(); }
    Digest tip_hash() const { return blocks_.empty() ? kZeroDigest : blocks_.back().block_hash; }

    /// Builds the next linked block for payload.
    Block make_block(BlockPayload payload, std::uint64_t timestamp) const;
    const Block& append(Block block);
    const Block& append(BlockPayload payload, std::uint64_t timestamp) {
        return append(make_block(std::move(payload), timestamp));
    }

    /// Binary dump: "HEFLCHN1", u32 version, u32-prefixed name, u64 block
    /// count, SHA-256 of those header bytes, then per block a u64 record
    /// length and the record (height, previous, payload hash, timestamp,
    /// block hash, u64-prefixed payload).
    Bytes dump() const;
    /// Human-readable index of the chain (one entry per block).
    std::string index_json() const;

private:
    std::string name_;
    std::vector<Block> blocks_;
};

/// Checks genesis, height sequence, hash links, stored block hashes and
/// payload hashes. Reports the first height that fails.
ChainValidation validate_chain(const Chain& chain);

struct ChainDumpLoad {
    Chain chain;
    /// Set when a block record could not be decoded.
    std::optional<ChainValidation> structural_error;
};

/// Throws Error(kIo) when the header is unreadable (empty file, bad magic).
ChainDumpLoad load_chain_dump(std::span<const std::uint8_t> bytes);
/// Structural and hash validation of a dump.
ChainValidation validate_chain_dump(std::span<const std::uint8_t> bytes);

void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
Bytes read_file(const std::string& path);

/// The m replicas of one permissioned chain.
class NodeSet {
public:
    NodeSet(std::string name, std::size_t nodes);

    const std::string& name() const noexcept { return name_; }
    std::size_t size() const noexcept { return replicas_.size(); }
    const Chain& replica(std::size_t i) const { return replicas_.at(i); }
    Chain& replica(std::size_t i) { return replicas_.at(i); }
    bool replicas_identical() const;

private:
    std::string name_;
    std::vector<Chain> replicas_;
};

struct ConsensusOutcome {
    bool accepted = false;
    std::optional<Block> block;
    Digest proposed_hash{};
    std::vector<Digest> votes;          // per node
    std::vector<std::size_t> dissenters;
    std::size_t agreeing = 0;
};

class QuorumError : public Error {
public:
    QuorumError(const std::string& what, std::vector<std::size_t> dissenters)
        : Error(ErrorCode::kQuorumFailure, what), dissenters_(std::move(dissenters)) {}
    const std::vector<std::size_t>& dissenters() const noexcept { return dissenters_; }

private:
    std::vector<std::size_t> dissenters_;
};

/// Throws QuorumError if the outcome was rejected.
void require_accepted(const ConsensusOutcome& outcome, const std::string& what);

/// Strict majority: more than half of the nodes.
bool is_quorum(std::size_t agreeing, std::size_t nodes);

/// Transformation applied to node `i`'s received copy before it hashes
/// (fault injection harness).
using RecordFault = std::function<void(std::size_t node, ModelRecord& record)>;

struct LedgerContext {
    MessageLog* log = nullptr;
    ActorId submitter;
    std::uint32_t group = 0;
    bool bm = false;
};

/// The submitter broadcasts the record with its hash; every node hashes its
/// copy and broadcasts (node_id, h_i); the block is appended to every replica
/// when a strict majority reproduces the submitted hash.
ConsensusOutcome verify_and_append_model(NodeSet& nodes, const ModelRecord& proposal,
                                         std::uint64_t tick, const RecordFault& fault = {},
                                         const LedgerContext& ctx = {});

struct TuningInputs {
    std::vector<ProbabilityMatrix> mats;
    std::vector<int> labels;
    WeightGrid grid;
};

using TuningFault = std::function<void(std::size_t node, TuningInputs& inputs)>;
using ModelIdLookup = std::function<bool(const std::string& model_id)>;

/// Every node re-runs the grid search on its copy of the tuning inputs and
/// votes with the hash of its own (gm_ids, alpha, accuracy) record.
/// Throws Error(kUnknownModelId) if a GM id is not recorded.
ConsensusOutcome verify_and_append_weights(NodeSet& nodes, const WeightRecord& proposal,
                                           const TuningInputs& inputs, const ModelIdLookup& known,
                                           std::uint64_t tick, const TuningFault& fault = {},
                                           const LedgerContext& ctx = {});

}  // namespace hefl
