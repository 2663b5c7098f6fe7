#include <doctest.h>

#include <cmath>
#include <cstring>

#include "hefl/ledger.hpp"
#include "support.hpp"

using namespace hefl;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

Digest filled(std::uint8_t v) {
    Digest d;
    d.fill(v);
    return d;
}

ModelRecord record(std::string id, std::uint8_t seed) {
    ModelRecord m;
    m.model_id = std::move(id);
    m.spec_hash = filled(seed);
    m.content = Bytes(16, seed);
    m.submitter = "H1";
    return m;
}

Chain chain_of(std::size_t n) {
    Chain c("c");
    for (std::size_t i = 0; i < n; ++i) c.append(record("m" + std::to_string(i), static_cast<std::uint8_t>(i)), i);
    return c;
}

// Byte offset where block k's length-prefixed record starts in a dump.
std::vector<std::size_t> record_offsets(const Chain& c) {
    std::vector<std::size_t> out;
    std::size_t pos = 8 + 4 + 4 + c.name().size() + 8 + 32;
    const Bytes d = c.dump();
    for (std::size_t k = 0; k < c.size(); ++k) {
        out.push_back(pos);
        std::uint64_t len = 0;
        std::memcpy(&len, d.data() + pos, 8);
        pos += 8 + len;
    }
    out.push_back(pos);
    return out;
}

}  // namespace

// Expected digests from an independent hasher (Python hashlib) over the
// documented field layout.
TEST_CASE("model payload reference digests") {
    ModelRecord empty;
    empty.model_id = "H1/r0/global";
    empty.spec_hash = filled(0x11);
    empty.content = {0, 0, 0, 0};
    empty.submitter = "H1";
    CHECK(to_hex(payload_hash(empty)) == "320dee832a9480c8c338717ab928464c4e89cbe24e8eee17bd80a0d2b03ca81e");

    // Dense 1x1 (w=1.5, b=-1.0, f=16) then a parameterless softmax entry.
    ModelSpec spec{"one", {1}, {DenseLayer{1, 1}, SoftmaxLayer{}}};
    hefl::Rng rng(0);
    ModelParams p = init_params(spec, rng, "m");
    p.layers[0].weight = {1.5};
    p.layers[0].bias = {-1.0};
    ModelRecord dense = make_model_record(p, FixedPointCodec{16}, "H2");
    dense.spec_hash = kZeroDigest;
    CHECK(to_hex(payload_hash(dense)) == "4d4c4170825dd42228b6d2196e7617efbe24bd9d2d4f25b7dc0c40933730e06a");
}

TEST_CASE("weight payload and block reference digests") {
    WeightRecord w{{"A/r1/global", "B/r1/global"}, {0.75, 0.25}, 0.9, "cloud"};
    CHECK(payload_id(w) == "A/r1/global|B/r1/global");
    CHECK(to_hex(payload_hash(w)) == "2d75bdd4f859b18e9dfc8b3e079b3bdc5dfb2a44a734500eb9c841d765256f20");
    CHECK(to_hex(compute_block_hash(0, kZeroDigest, filled(0xab), 7)) ==
          "8bf1485e407bf37c3bd73b0b7070309ed36fa376033af88e928665bdd36908c7");
}

TEST_CASE("canonical serialization is deterministic and parseable") {
    const BlockPayload m = record("x", 3);
    CHECK(canonical_serialize(m) == canonical_serialize(record("x", 3)));
    CHECK(canonical_serialize(parse_payload(canonical_serialize(m))) == canonical_serialize(m));
    const BlockPayload w = WeightRecord{{"a"}, {1.0}, 0.5, "bm"};
    CHECK(canonical_serialize(parse_payload(canonical_serialize(w))) == canonical_serialize(w));
    Bytes bad = canonical_serialize(m);
    bad[0] = 9;
    CHECK(code_of([&] { parse_payload(bad); }) == ErrorCode::kIo);
}

TEST_CASE("property: one-ulp and single-byte changes change the hash") {
    ModelSpec spec{"lin", {3}, {DenseLayer{3, 2}, SoftmaxLayer{}}};
    hefl::Rng rng(70);
    const ModelParams p = init_params(spec, rng, "m");
    const Digest base = payload_hash(make_model_record(p, FixedPointCodec{16}, "H"));
    ModelParams q = p;
    // Smallest representable change on the ring is one unit of 2^-16.
    q.layers[0].weight[0] += std::ldexp(1.0, -16);
    CHECK(payload_hash(make_model_record(q, FixedPointCodec{16}, "H")) != base);

    const ModelRecord r = record("flip", 5);
    const Digest h = payload_hash(r);
    for (int t = 0; t < 100; ++t) {
        ModelRecord c = r;
        const std::size_t i = rng.below(c.content.size());
        c.content[i] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        REQUIRE(payload_hash(c) != h);
    }
    ModelRecord renamed = r;
    renamed.model_id = "flip2";
    CHECK(payload_hash(renamed) != h);
}

TEST_CASE("hash-only records store the digest of the model bytes") {
    ModelSpec spec{"lin", {2}, {DenseLayer{2, 2}, SoftmaxLayer{}}};
    hefl::Rng rng(71);
    const ModelParams p = init_params(spec, rng, "m");
    const auto full = make_model_record(p, FixedPointCodec{16}, "H", false);
    const auto slim = make_model_record(p, FixedPointCodec{16}, "H", true);
    CHECK(slim.hash_only);
    const Digest d = sha256(full.content);
    CHECK(slim.content == Bytes(d.begin(), d.end()));
}

TEST_CASE("quorum threshold") {
    CHECK(is_quorum(3, 5));
    CHECK_FALSE(is_quorum(2, 5));
    CHECK(is_quorum(2, 3));
    CHECK_FALSE(is_quorum(2, 4));
    CHECK(is_quorum(1, 1));
}

TEST_CASE("model consensus with faulty nodes") {
    for (std::size_t m : {3u, 5u}) {
        CAPTURE(m);
        SUBCASE("honest nodes append to every replica") {
            NodeSet nodes("H1", m);
            const auto out = verify_and_append_model(nodes, record("a", 1), 0);
            CHECK(out.accepted);
            CHECK(out.agreeing == m);
            CHECK(out.dissenters.empty());
            CHECK(nodes.replicas_identical());
            CHECK(nodes.replica(m - 1).size() == 1);
        }
        SUBCASE("one corrupted copy is flagged but the block is accepted") {
            NodeSet nodes("H1", m);
            RecordFault fault = [](std::size_t node, ModelRecord& r) {
                if (node == 1) r.content[0] ^= 1;
            };
            const auto out = verify_and_append_model(nodes, record("a", 1), 0, fault);
            CHECK(out.accepted);
            CHECK(out.dissenters == std::vector<std::size_t>{1});
            CHECK(nodes.replicas_identical());
        }
        SUBCASE("ceil(m/2) corrupted copies reject") {
            NodeSet nodes("H1", m);
            const std::size_t bad = (m + 1) / 2;
            RecordFault fault = [&](std::size_t node, ModelRecord& r) {
                if (node < bad) r.content[0] ^= 1;
            };
            const auto out = verify_and_append_model(nodes, record("a", 1), 0, fault);
            CHECK_FALSE(out.accepted);
            CHECK(out.dissenters.size() == bad);
            for (std::size_t i = 0; i < m; ++i) CHECK(nodes.replica(i).empty());
            try {
                require_accepted(out, "a");
                FAIL("expected rejection");
            } catch (const QuorumError& e) {
                CHECK(e.code() == ErrorCode::kQuorumFailure);
                CHECK(e.dissenters().size() == bad);
            }
        }
    }
}

TEST_CASE("weight consensus") {
    hefl::Rng rng(72);
    TuningInputs in;
    const std::size_t n = 30, c = 3;
    for (const char* id : {"A/r1/global", "B/r1/global"}) {
        ProbabilityMatrix m;
        m.hospital_id = id;
        m.model_id = id;
        m.num_classes = c;
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<double> row(c);
            double s = 0;
            for (auto& v : row) s += (v = rng.uniform(0.01, 1));
            for (auto& v : row) v /= s;
            m.rows.push_back(row);
        }
        in.mats.push_back(m);
    }
    for (std::size_t r = 0; r < n; ++r) in.labels.push_back(static_cast<int>(rng.below(c)));
    in.grid = WeightGrid::with_step(0.1);
    const auto t = grid_search_weights(in.mats, in.labels, in.grid);
    const WeightRecord honest{{"A/r1/global", "B/r1/global"}, t.alpha_best.alpha, t.accuracy, "cloud"};
    const ModelIdLookup known = [](const std::string& id) { return id != "ghost"; };

    NodeSet ok("bm", 5);
    const auto a = verify_and_append_weights(ok, honest, in, known, 0);
    CHECK(a.accepted);
    CHECK(a.agreeing == 5);

    NodeSet one_bad("bm", 5);
    TuningFault perturb = [](std::size_t node, TuningInputs& x) {
        if (node == 2)
            for (auto& row : x.mats[0].rows) std::swap(row.front(), row.back());
    };
    const auto b = verify_and_append_weights(one_bad, honest, in, known, 0, perturb);
    CHECK(b.accepted);
    CHECK(b.dissenters == std::vector<std::size_t>{2});

    WeightRecord wrong = honest;
    wrong.alpha = {0.5, 0.5};
    if (wrong.alpha == honest.alpha) wrong.alpha = {0.4, 0.6};
    NodeSet rej("bm", 5);
    const auto r = verify_and_append_weights(rej, wrong, in, known, 0);
    CHECK_FALSE(r.accepted);
    CHECK(r.dissenters.size() == 5);
    CHECK(rej.replica(0).empty());

    WeightRecord ghost = honest;
    ghost.gm_ids[1] = "ghost";
    CHECK(code_of([&] { verify_and_append_weights(ok, ghost, in, known, 1); }) == ErrorCode::kUnknownModelId);
}

TEST_CASE("chain validation finds the first tampered height") {
    Chain c = chain_of(6);
    CHECK(validate_chain(c).valid);
    std::get<ModelRecord>(c.mutable_blocks()[3].payload).content[0] ^= 0xff;
    auto v = validate_chain(c);
    CHECK_FALSE(v.valid);
    CHECK(v.first_bad_height == 3);

    // Re-hashing block 3 moves the break to the link at 4.
    Block& b = c.mutable_blocks()[3];
    b.payload_hash = payload_hash(b.payload);
    b.block_hash = compute_block_hash(b.height, b.previous_hash, b.payload_hash, b.timestamp);
    v = validate_chain(c);
    CHECK_FALSE(v.valid);
    CHECK(v.first_bad_height == 4);

    Chain g = chain_of(2);
    g.mutable_blocks()[0].previous_hash = filled(1);
    CHECK(validate_chain(g).first_bad_height == 0);
}

TEST_CASE("append rejects blocks that do not extend the tip") {
    Chain c = chain_of(2);
    Block stale = chain_of(1).blocks()[0];
    CHECK(code_of([&] { c.append(stale); }) == ErrorCode::kLedgerRejection);
    Block forged = c.make_block(record("z", 9), 5);
    forged.timestamp = 6;
    CHECK(code_of([&] { c.append(forged); }) == ErrorCode::kLedgerRejection);
}

TEST_CASE("dump and load round trip; prefixes are stable") {
    Chain c = chain_of(5);
    const Bytes d = c.dump();
    const auto back = load_chain_dump(d);
    CHECK_FALSE(back.structural_error.has_value());
    CHECK(back.chain.dump() == d);
    CHECK(validate_chain_dump(d).valid);

    // Append-only: earlier blocks are unchanged by later appends.
    Chain grow("c");
    std::vector<Block> seen;
    for (std::size_t i = 0; i < 5; ++i) {
        grow.append(record("m" + std::to_string(i), static_cast<std::uint8_t>(i)), i);
        for (std::size_t k = 0; k < seen.size(); ++k) CHECK(grow.blocks()[k].block_hash == seen[k].block_hash);
        seen.push_back(grow.blocks().back());
    }
    CHECK(code_of([] { load_chain_dump(Bytes{}); }) == ErrorCode::kIo);
    CHECK(code_of([] { load_chain_dump(Bytes{'n', 'o', 'p', 'e'}); }) == ErrorCode::kIo);
}

TEST_CASE("property: a flipped dump byte is reported at its block") {
    const Chain c = chain_of(6);
    const Bytes clean = c.dump();
    const auto offsets = record_offsets(c);
    REQUIRE(offsets.back() == clean.size());
    hefl::Rng rng(73);
    for (int t = 0; t < 100; ++t) {
        Bytes d = clean;
        const std::size_t pos = offsets[0] + rng.below(clean.size() - offsets[0]);
        d[pos] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        std::size_t k = 0;
        while (offsets[k + 1] <= pos) ++k;
        const auto v = validate_chain_dump(d);
        CAPTURE(pos);
        REQUIRE_FALSE(v.valid);
        REQUIRE(v.first_bad_height.has_value());
        // A corrupted length prefix can only be noticed at or after its block.
        REQUIRE(*v.first_bad_height >= k);
        if (pos >= offsets[k] + 8) REQUIRE(*v.first_bad_height == k);
    }
    Bytes header = clean;
    header[16] ^= 1;  // inside the chain name
    CHECK(validate_chain_dump(header).first_bad_height == 0);
}
