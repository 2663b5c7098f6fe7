#include <doctest.h>

#include "hefl/digest.hpp"
#include "hefl/error.hpp"

using namespace hefl;

// Reference digests from an independent hasher (Python hashlib).
TEST_CASE("sha256 reference vectors") {
    CHECK(to_hex(sha256(std::string_view(""))) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256(std::string_view("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    Sha256 inc;
    inc.update(std::string_view("a")).update(std::string_view("bc"));
    CHECK(to_hex(inc.finish()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hex round trip") {
    const Digest d = sha256(std::string_view("x"));
    CHECK(digest_from_hex(to_hex(d)) == d);
    CHECK_THROWS_AS(digest_from_hex("zz"), Error);
}

TEST_CASE("byte writer and reader are little endian and bounds checked") {
    ByteWriter w;
    w.u32(0x01020304);
    w.u64(5);
    w.f64(1.5);
    w.str("hi");
    w.blob(std::vector<std::uint8_t>{9, 8});
    const Bytes b = w.bytes();
    CHECK(b[0] == 0x04);
    CHECK(b[3] == 0x01);
    ByteReader r(b);
    CHECK(r.u32() == 0x01020304);
    CHECK(r.u64() == 5);
    CHECK(r.f64() == 1.5);
    CHECK(r.str() == "hi");
    CHECK(r.blob() == Bytes{9, 8});
    CHECK(r.done());
    try {
        r.u8();
        FAIL("read past end");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kIo);
    }
}
