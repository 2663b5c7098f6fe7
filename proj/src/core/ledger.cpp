#include "hefl/ledger.hpp"

#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

namespace hefl {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'F', 'L', 'C', 'H', 'N', '1'};
constexpr std::uint32_t kDumpVersion = 1;
constexpr std::uint8_t kModelTag = 1;
constexpr std::uint8_t kWeightTag = 2;

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

Bytes header_bytes(const std::string& name, std::uint64_t count) {
    ByteWriter w;
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), sizeof kMagic));
    w.u32(kDumpVersion);
    w.str(name);
    w.u64(count);
    return std::move(w).take();
}

Bytes block_record(const Block& b) {
    ByteWriter w;
    w.u64(b.height);
    w.digest(b.previous_hash);
    w.digest(b.payload_hash);
    w.u64(b.timestamp);
    w.digest(b.block_hash);
    w.blob(canonical_serialize(b.payload));
    return std::move(w).take();
}

ChainValidation invalid_at(std::uint64_t height, std::string reason) {
    return ChainValidation{false, height, std::move(reason)};
}

ActorId node_actor(const LedgerContext& ctx, std::size_t i) {
    return ctx.bm ? ActorId::bm_node(static_cast<std::uint32_t>(i))
                  : ActorId::ledger_node(ctx.group, static_cast<std::uint32_t>(i));
}

// One broadcast round of (node_id, h_i) followed by the local tally.
ConsensusOutcome tally(NodeSet& nodes, const BlockPayload& proposal, const Digest& proposed,
                       std::vector<Digest> votes, std::uint64_t tick, const LedgerContext& ctx) {
    ConsensusOutcome out;
    out.proposed_hash = proposed;
    if (ctx.log) {
        for (std::size_t i = 0; i < votes.size(); ++i)
            for (std::size_t j = 0; j < votes.size(); ++j)
                if (i != j)
                    ctx.log->send_sized(node_actor(ctx, i), node_actor(ctx, j), MessageKind::kLedgerVote, 8 + 32,
                                        fingerprint_bytes(votes[i]));
    }
    for (std::size_t i = 0; i < votes.size(); ++i) {
        if (votes[i] == proposed) ++out.agreeing;
        else out.dissenters.push_back(i);
    }
    out.votes = std::move(votes);
    out.accepted = is_quorum(out.agreeing, nodes.size());
    if (out.accepted) {
        Block block = nodes.replica(0).make_block(proposal, tick);
        for (std::size_t i = 0; i < nodes.size(); ++i) nodes.replica(i).append(block);
        out.block = std::move(block);
    }
    return out;
}

}  // namespace

Bytes canonical_serialize(const BlockPayload& payload) {
    ByteWriter w;
    std::visit(Overloaded{
                   [&](const ModelRecord& m) {
                       w.u8(kModelTag);
                       w.str(m.model_id);
                       w.digest(m.spec_hash);
                       w.u8(m.hash_only ? 1 : 0);
                       w.blob(m.content);
                       w.str(m.submitter);
                   },
                   [&](const WeightRecord& r) {
                       w.u8(kWeightTag);
                       w.u32(static_cast<std::uint32_t>(r.gm_ids.size()));
                       for (const auto& id : r.gm_ids) w.str(id);
                       w.u32(static_cast<std::uint32_t>(r.alpha.size()));
                       for (double a : r.alpha) w.f64(a);
                       w.f64(r.accuracy);
                       w.str(r.submitter);
                   },
               },
               payload);
    return std::move(w).take();
}

BlockPayload parse_payload(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    BlockPayload out;
    const std::uint8_t tag = r.u8();
    if (tag == kModelTag) {
        ModelRecord m;
        m.model_id = r.str();
        m.spec_hash = r.digest();
        const std::uint8_t flag = r.u8();
        if (flag > 1) fail(ErrorCode::kIo, "payload flag byte out of range");
        m.hash_only = flag == 1;
        m.content = r.blob();
        m.submitter = r.str();
        out = std::move(m);
    } else if (tag == kWeightTag) {
        WeightRecord w;
        const std::uint32_t ids = r.u32();
        if (ids > r.remaining()) fail(ErrorCode::kIo, "id count exceeds payload");
        for (std::uint32_t i = 0; i < ids; ++i) w.gm_ids.push_back(r.str());
        const std::uint32_t n = r.u32();
        if (n > r.remaining() / 8) fail(ErrorCode::kIo, "weight count exceeds payload");
        for (std::uint32_t i = 0; i < n; ++i) w.alpha.push_back(r.f64());
        w.accuracy = r.f64();
        w.submitter = r.str();
        out = std::move(w);
    } else {
        fail(ErrorCode::kIo, "unknown payload tag " + std::to_string(tag));
    }
    if (!r.done()) fail(ErrorCode::kIo, "trailing bytes after payload");
    return out;
}

std::string payload_id(const BlockPayload& payload) {
    if (const auto* m = std::get_if<ModelRecord>(&payload)) return m->model_id;
    const auto& w = std::get<WeightRecord>(payload);
    std::string out;
    for (std::size_t i = 0; i < w.gm_ids.size(); ++i) out += (i ? "|" : "") + w.gm_ids[i];
    return out;
}

const char* payload_type(const BlockPayload& payload) {
    return std::holds_alternative<ModelRecord>(payload) ? "model" : "weights";
}

Digest compute_model_hash(std::span<const std::uint8_t> bytes, std::string_view id) {
    return Sha256().update(bytes).update(id).finish();
}

Digest payload_hash(const BlockPayload& payload) {
    return compute_model_hash(canonical_serialize(payload), payload_id(payload));
}

Bytes encode_model_bytes(const ModelParams& params, const FixedPointCodec& codec) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(params.layers.size()));
    for (const auto& lp : params.layers) {
        w.u64(lp.weight.size());
        for (double v : lp.weight) w.u64(codec.encode(v).value);
        w.u64(lp.bias.size());
        for (double v : lp.bias) w.u64(codec.encode(v).value);
    }
    return std::move(w).take();
}

ModelRecord make_model_record(const ModelParams& params, const FixedPointCodec& codec, std::string submitter,
                              bool hash_only) {
    ModelRecord m;
    m.model_id = params.model_id;
    m.spec_hash = params.spec_hash;
    m.hash_only = hash_only;
    Bytes bytes = encode_model_bytes(params, codec);
    if (hash_only) {
        const Digest d = sha256(bytes);
        m.content.assign(d.begin(), d.end());
    } else {
        m.content = std::move(bytes);
    }
    m.submitter = std::move(submitter);
    return m;
}

Digest compute_block_hash(std::uint64_t height, const Digest& previous, const Digest& payload,
                          std::uint64_t timestamp) {
    ByteWriter w;
    w.u64(height);
    w.digest(previous);
    w.digest(payload);
    w.u64(timestamp);
    return sha256(w.bytes());
}

Block Chain::make_block(BlockPayload payload, std::uint64_t timestamp) const {
    Block b;
    b.height = blocks_.size();
    b.previous_hash = tip_hash();
    b.payload_hash = hefl::payload_hash(payload);
    b.timestamp = timestamp;
    b.block_hash = compute_block_hash(b.height, b.previous_hash, b.payload_hash, b.timestamp);
    b.payload = std::move(payload);
    return b;
}

const Block& Chain::append(Block block) {
    require(block.height == blocks_.size() && block.previous_hash == tip_hash(), ErrorCode::kLedgerRejection,
            name_ + ": block does not extend the tip");
    require(block.payload_hash == hefl::payload_hash(block.payload) &&
                block.block_hash ==
                    compute_block_hash(block.height, block.previous_hash, block.payload_hash, block.timestamp),
            ErrorCode::kLedgerRejection, name_ + ": block hashes do not match its contents");
    blocks_.push_back(std::move(block));
    return blocks_.back();
}

Bytes Chain::dump() const {
    Bytes head = header_bytes(name_, blocks_.size());
    ByteWriter w;
    w.raw(head);
    w.digest(sha256(head));
    for (const auto& b : blocks_) {
        const Bytes rec = block_record(b);
        w.u64(rec.size());
        w.raw(rec);
    }
    return std::move(w).take();
}

std::string Chain::index_json() const {
    nlohmann::ordered_json j;
    j["chain"] = name_;
    j["length"] = blocks_.size();
    j["tip"] = to_hex(tip_hash());
    auto& arr = j["blocks"] = nlohmann::ordered_json::array();
    for (const auto& b : blocks_) {
        nlohmann::ordered_json e;
        e["height"] = b.height;
        e["timestamp"] = b.timestamp;
        e["previous_hash"] = to_hex(b.previous_hash);
        e["payload_hash"] = to_hex(b.payload_hash);
        e["block_hash"] = to_hex(b.block_hash);
        e["payload_type"] = payload_type(b.payload);
        e["payload_id"] = payload_id(b.payload);
        std::visit(Overloaded{
                       [&](const ModelRecord& m) {
                           e["submitter"] = m.submitter;
                           e["spec_hash"] = to_hex(m.spec_hash);
                           e["hash_only"] = m.hash_only;
                           e["content_bytes"] = m.content.size();
                       },
                       [&](const WeightRecord& r) {
                           e["submitter"] = r.submitter;
                           e["alpha"] = r.alpha;
                           e["accuracy"] = r.accuracy;
                       },
                   },
                   b.payload);
        arr.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

ChainValidation validate_chain(const Chain& chain) {
    Digest prev = kZeroDigest;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain.blocks()[i];
        if (b.height != i) return invalid_at(i, "height field reads " + std::to_string(b.height));
        if (b.previous_hash != prev)
            return invalid_at(i, i == 0 ? "genesis previous hash is not zero" : "previous hash does not link");
        if (b.payload_hash != payload_hash(b.payload)) return invalid_at(i, "payload hash mismatch");
        if (b.block_hash != compute_block_hash(b.height, b.previous_hash, b.payload_hash, b.timestamp))
            return invalid_at(i, "block hash mismatch");
        prev = b.block_hash;
    }
    return {};
}

ChainDumpLoad load_chain_dump(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) fail(ErrorCode::kIo, "chain dump is empty");
    ByteReader r(bytes);
    const auto magic = r.take(std::min<std::size_t>(sizeof kMagic, bytes.size()));
    if (magic.size() != sizeof kMagic || !std::equal(magic.begin(), magic.end(), kMagic))
        fail(ErrorCode::kIo, "not a chain dump (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kDumpVersion) fail(ErrorCode::kIo, "unsupported chain dump version " + std::to_string(version));
    std::string name = r.str();
    const std::uint64_t count = r.u64();
    const std::size_t head_len = r.position();
    const Digest head_digest = r.digest();

    ChainDumpLoad out{Chain(name), std::nullopt};
    if (head_digest != sha256(bytes.subspan(0, head_len))) {
        out.structural_error = invalid_at(0, "chain header checksum mismatch");
        return out;
    }
    for (std::uint64_t h = 0; h < count; ++h) {
        try {
            const std::uint64_t len = r.u64();
            if (len > r.remaining()) fail(ErrorCode::kIo, "record length exceeds file");
            const auto raw = r.take(static_cast<std::size_t>(len));
            ByteReader br(raw);
            Block b;
            b.height = br.u64();
            b.previous_hash = br.digest();
            b.payload_hash = br.digest();
            b.timestamp = br.u64();
            b.block_hash = br.digest();
            const Bytes payload_bytes = br.blob();
            if (!br.done()) fail(ErrorCode::kIo, "trailing bytes in block record");
            b.payload = parse_payload(payload_bytes);
            if (canonical_serialize(b.payload) != payload_bytes) fail(ErrorCode::kIo, "non-canonical payload");
            out.chain.mutable_blocks().push_back(std::move(b));
        } catch (const Error& e) {
            out.structural_error = invalid_at(h, std::string("undecodable block: ") + e.what());
            return out;
        }
    }
    if (!r.done()) out.structural_error = invalid_at(count, "trailing bytes after the last block");
    return out;
}

ChainValidation validate_chain_dump(std::span<const std::uint8_t> bytes) {
    ChainDumpLoad loaded = load_chain_dump(bytes);
    ChainValidation v = validate_chain(loaded.chain);
    if (!v.valid) return v;
    if (loaded.structural_error) return *loaded.structural_error;
    return v;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

NodeSet::NodeSet(std::string name, std::size_t nodes) : name_(std::move(name)) {
    require(nodes >= 1, ErrorCode::kInvalidArgument, "a ledger needs at least one node");
    replicas_.assign(nodes, Chain(name_));
}

bool NodeSet::replicas_identical() const {
    const Bytes first = replicas_.front().dump();
    for (std::size_t i = 1; i < replicas_.size(); ++i)
        if (replicas_[i].dump() != first) return false;
    return true;
}

bool is_quorum(std::size_t agreeing, std::size_t nodes) { return 2 * agreeing > nodes; }

void require_accepted(const ConsensusOutcome& outcome, const std::string& what) {
    if (outcome.accepted) return;
    std::string list;
    for (std::size_t i = 0; i < outcome.dissenters.size(); ++i)
        list += (i ? "," : "") + std::to_string(outcome.dissenters[i]);
    throw QuorumError(what + ": " + std::to_string(outcome.agreeing) + " of " +
                          std::to_string(outcome.votes.size()) + " nodes agreed; dissenting nodes [" + list + "]",
                      outcome.dissenters);
}

ConsensusOutcome verify_and_append_model(NodeSet& nodes, const ModelRecord& proposal, std::uint64_t tick,
                                         const RecordFault& fault, const LedgerContext& ctx) {
    const BlockPayload payload = proposal;
    const Digest proposed = payload_hash(payload);
    if (ctx.log) {
        const Bytes bytes = canonical_serialize(payload);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            ctx.log->send_sized(ctx.submitter, node_actor(ctx, i), MessageKind::kLedgerProposal, bytes.size() + 32,
                                fingerprint_bytes(bytes));
    }
    std::vector<Digest> votes(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        ModelRecord copy = proposal;
        if (fault) fault(i, copy);
        votes[i] = payload_hash(BlockPayload(std::move(copy)));
    }
    return tally(nodes, payload, proposed, std::move(votes), tick, ctx);
}

ConsensusOutcome verify_and_append_weights(NodeSet& nodes, const WeightRecord& proposal, const TuningInputs& inputs,
                                           const ModelIdLookup& known, std::uint64_t tick, const TuningFault& fault,
                                           const LedgerContext& ctx) {
    for (const auto& id : proposal.gm_ids)
        require(!known || known(id), ErrorCode::kUnknownModelId, "global model '" + id + "' is not on any chain");
    const BlockPayload payload = proposal;
    const Digest proposed = payload_hash(payload);
    if (ctx.log) {
        const Bytes bytes = canonical_serialize(payload);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            ctx.log->send_sized(ctx.submitter, node_actor(ctx, i), MessageKind::kWeightProposal, bytes.size() + 32,
                                fingerprint_bytes(bytes));
    }
    std::vector<Digest> votes(nodes.size(), kZeroDigest);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        TuningInputs copy = inputs;
        if (fault) fault(i, copy);
        try {
            const TuningResult t = grid_search_weights(copy.mats, copy.labels, copy.grid);
            WeightRecord mine{proposal.gm_ids, t.alpha_best.alpha, t.accuracy, proposal.submitter};
            votes[i] = payload_hash(BlockPayload(std::move(mine)));
        } catch (const Error&) {
            // A node that cannot recompute the weights votes with the zero digest.
        }
    }
    return tally(nodes, payload, proposed, std::move(votes), tick, ctx);
}

}  // namespace hefl
