#include <doctest.h>

#include <cmath>

#include "hefl/conversion.hpp"
#include "hefl/secure_ops.hpp"
#include "support.hpp"

using namespace hefl;
using hefl::test::floor_shift;
using hefl::test::Harness;
using hefl::test::random_reals;

namespace {

constexpr int kF = 16;
const double kUlp = std::ldexp(1.0, -kF);

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

std::vector<double> decoded(const SecureTensor& t, const FixedPointCodec& c) { return reconstruct_real(t, c); }

}  // namespace

TEST_CASE("sec_add examples and oracle") {
    for (std::size_t h : {2u, 3u}) {
        Harness H(h, 20 + h);
        auto& s = H.session;
        CHECK(decoded(sec_add(H.share({2}), H.share({3})), s.codec())[0] == 5.0);
        const auto x = H.share({1.25, -7.5});
        CHECK(reconstruct(sec_add(x, H.share({0, 0}))) == reconstruct(x));

        hefl::Rng rng(21);
        const auto a = hefl::test::random_ring(rng, 1000), b = hefl::test::random_ring(rng, 1000);
        const auto opened_before = s.opened(MessageKind::kBeaverOpen);
        const auto sum = reconstruct(sec_add(H.share_raw(a, kF), H.share_raw(b, kF)));
        for (std::size_t i = 0; i < 1000; ++i) REQUIRE(sum[i] == a[i] + b[i]);
        CHECK(s.opened(MessageKind::kBeaverOpen) == opened_before);
        const auto diff = reconstruct(sec_sub(H.share_raw(a, kF), H.share_raw(b, kF)));
        for (std::size_t i = 0; i < 1000; ++i) REQUIRE(diff[i] == a[i] - b[i]);
    }
}

TEST_CASE("precision and shape discipline") {
    Harness H(2, 22);
    auto& s = H.session;
    const auto x = H.share({1, 2});
    const auto x2 = sec_mul(s, x, x);
    CHECK(x2.frac_bits == 2 * kF);
    CHECK(code_of([&] { sec_add(x, x2); }) == ErrorCode::kPrecisionMismatch);
    CHECK(code_of([&] { sec_add(x, H.share({1, 2, 3})); }) == ErrorCode::kShapeMismatch);
    CHECK(code_of([&] { sec_mul(s, x2, x2); }) == ErrorCode::kPrecisionMismatch);
    CHECK(code_of([&] { sec_relu(s, x2); }) == ErrorCode::kPrecisionMismatch);
    CHECK(code_of([&] { sec_truncate(s, x); }) == ErrorCode::kPrecisionMismatch);
    CHECK(code_of([&] { sec_matmul(s, H.share({1, 2, 3, 4}, {2, 2}), H.share({1, 2, 3}, {3, 1})); }) ==
          ErrorCode::kShapeMismatch);
}

TEST_CASE("sec_mul examples") {
    Harness H(3, 23);
    auto& s = H.session;
    const auto six = sec_mul(s, H.share({2}), H.share({3}));
    CHECK(reconstruct(six)[0].as_signed() == (6LL << (2 * kF)));
    CHECK(reconstruct(sec_mul(s, H.share({5.5}), H.share({0})))[0].value == 0);
}

TEST_CASE("property: sec_mul then truncate matches the fixed-point oracle") {
    for (std::size_t h : {2u, 3u}) {
        Harness H(h, 24 + h);
        auto& s = H.session;
        hefl::Rng rng(24);
        const auto xs = random_reals(rng, 1000, -8, 8), ys = random_reals(rng, 1000, -8, 8);
        const auto before = s.opened(MessageKind::kBeaverOpen);
        const auto prod = sec_mul(s, H.share(xs), H.share(ys));
        CHECK(s.opened(MessageKind::kBeaverOpen) - before == 2 * 1000);
        const auto raw = reconstruct(prod);
        const auto t = sec_truncate(s, prod);
        CHECK(t.frac_bits == kF);
        const auto got = reconstruct(t);
        for (std::size_t i = 0; i < 1000; ++i) {
            const RingElement ex = s.codec().encode(xs[i]) * s.codec().encode(ys[i]);
            REQUIRE(raw[i] == ex);
            REQUIRE(got[i].as_signed() == floor_shift(ex.as_signed(), kF));
            // Against the product of the quantized operands.
            const double qx = s.codec().decode(s.codec().encode(xs[i])), qy = s.codec().decode(s.codec().encode(ys[i]));
            REQUIRE(std::fabs(s.codec().decode(got[i]) - qx * qy) <= 3 * kUlp);
        }
    }
}

TEST_CASE("sec_truncate examples and oracle") {
    Harness H(3, 25);
    auto& s = H.session;
    const auto six = H.share_raw({RingElement::from_signed(6LL << 32)}, 2 * kF);
    CHECK(reconstruct(sec_truncate(s, six))[0].as_signed() == (6LL << 16));
    CHECK(reconstruct(sec_truncate(s, H.share_raw({RingElement(0)}, 2 * kF)))[0].value == 0);

    hefl::Rng rng(25);
    std::vector<RingElement> vals(1000);
    for (auto& v : vals) v = RingElement::from_signed(static_cast<std::int64_t>(rng.below(std::uint64_t{1} << 51)) -
                                                      (std::int64_t{1} << 50) + 1);
    const auto got = reconstruct(sec_truncate(s, H.share_raw(vals, 2 * kF)));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        REQUIRE(got[i].as_signed() == floor_shift(vals[i].as_signed(), kF));
        REQUIRE(std::fabs(std::ldexp(static_cast<double>(got[i].as_signed()), -kF) -
                          std::ldexp(static_cast<double>(vals[i].as_signed()), -2 * kF)) <= kUlp);
    }
    // Boundary magnitudes of the supported range.
    const std::vector<RingElement> edge{RingElement::from_signed((1LL << 50) - 1),
                                        RingElement::from_signed(-(1LL << 50) + 1), RingElement::from_signed(-1),
                                        RingElement::from_signed(1), RingElement::from_signed(-(1LL << 16))};
    const auto e = reconstruct(sec_truncate(s, H.share_raw(edge, 2 * kF)));
    for (std::size_t i = 0; i < edge.size(); ++i) CHECK(e[i].as_signed() == floor_shift(edge[i].as_signed(), kF));
}

TEST_CASE("sec_ltz examples") {
    Harness H(2, 26);
    auto& s = H.session;
    const auto r = reconstruct(sec_ltz(s, H.share({-3, 0, 2.5, -kUlp})));
    CHECK(r[0].value == 1);
    CHECK(r[1].value == 0);
    CHECK(r[2].value == 0);
    CHECK(r[3].value == 1);
}

TEST_CASE("sec_ltz opens one masked bit per element") {
    Harness H(3, 27);
    auto& s = H.session;
    const auto before = s.opened(MessageKind::kBitMaskOpen);
    sec_ltz(s, H.share({1, -1, 2, -2, 0}));
    CHECK(s.opened(MessageKind::kBitMaskOpen) - before == 5);
    CHECK(s.opened(MessageKind::kBeaverOpen) == 0);
}

TEST_CASE("property: sec_ltz over a scaled 12-bit sweep") {
    Harness H(3, 28);
    auto& s = H.session;
    std::vector<RingElement> vals;
    for (std::int64_t k = -2048; k < 2048; ++k) vals.push_back(RingElement::from_signed(k * 977));
    const auto r = reconstruct(sec_ltz(s, H.share_raw(vals, kF)));
    for (std::size_t i = 0; i < vals.size(); ++i) REQUIRE(r[i].value == (vals[i].as_signed() < 0 ? 1u : 0u));
}

TEST_CASE("sec_compare examples and oracle") {
    for (std::size_t h : {2u, 3u}) {
        Harness H(h, 29 + h);
        auto& s = H.session;
        CHECK(reconstruct(sec_compare(s, H.share({3}), H.share({5})))[0].value == 1);
        CHECK(reconstruct(sec_compare(s, H.share({4.25}), H.share({4.25})))[0].value == 0);
        hefl::Rng rng(29);
        const auto xs = random_reals(rng, 1000, -100, 100), ys = random_reals(rng, 1000, -100, 100);
        const auto r = reconstruct(sec_compare(s, H.share(xs), H.share(ys)));
        for (std::size_t i = 0; i < 1000; ++i) {
            const bool lt = s.codec().encode(xs[i]).as_signed() < s.codec().encode(ys[i]).as_signed();
            REQUIRE(r[i].value == (lt ? 1u : 0u));
        }
    }
}

TEST_CASE("sec_relu examples and oracle") {
    for (std::size_t h : {2u, 3u}) {
        Harness H(h, 31 + h);
        auto& s = H.session;
        const auto ex = decoded(sec_relu(s, H.share({-2.5, 4.0})), s.codec());
        CHECK(ex[0] == 0.0);
        CHECK(ex[1] == 4.0);
        hefl::Rng rng(31);
        const auto xs = random_reals(rng, 1000, -50, 50);
        const auto r = decoded(sec_relu(s, H.share(xs)), s.codec());
        for (std::size_t i = 0; i < 1000; ++i) REQUIRE(std::fabs(r[i] - std::max(xs[i], 0.0)) <= 2 * kUlp);
    }
}

TEST_CASE("sec_not and public ops") {
    Harness H(2, 33);
    auto& s = H.session;
    auto bits = sec_ltz(s, H.share({-1, 1}));
    const auto n = reconstruct(sec_not(bits));
    CHECK(n[0].value == 0);
    CHECK(n[1].value == 1);
    const auto x = H.share({1.5, -2});
    const auto shifted = decoded(sec_add_public(x, s.codec().encode(std::vector<double>{1, 1})), s.codec());
    CHECK(shifted == std::vector<double>{2.5, -1});
    const auto scaled = sec_scale_public(x, s.codec().encode(0.5), kF);
    CHECK(scaled.frac_bits == 2 * kF);
    CHECK(decoded(sec_truncate(s, scaled), s.codec()) == std::vector<double>{0.75, -1});
}

TEST_CASE("sec_matmul examples and oracle") {
    Harness H(3, 34);
    auto& s = H.session;
    const auto y = decoded(sec_matmul(s, H.share({1, 2}, {1, 2}), H.share({1, 0, 0, 1}, {2, 2})), s.codec());
    CHECK(y == std::vector<double>{1, 2});

    hefl::Rng rng(34);
    const auto a = random_reals(rng, 64, -1, 1), b = random_reals(rng, 64, -1, 1);
    const auto c = sec_matmul(s, H.share(a, {8, 8}), H.share(b, {8, 8}));
    CHECK(c.shape == Shape{8, 8});
    const auto got = reconstruct(c);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            double real = 0;
            RingElement acc;
            for (std::size_t k = 0; k < 8; ++k) {
                real += a[i * 8 + k] * b[k * 8 + j];
                acc += s.codec().encode(a[i * 8 + k]) * s.codec().encode(b[k * 8 + j]);
            }
            REQUIRE(got[i * 8 + j].as_signed() == floor_shift(acc.as_signed(), kF));
            REQUIRE(std::fabs(s.codec().decode(got[i * 8 + j]) - real) <= 8 * kUlp);
        }
}

TEST_CASE("sec_conv2d examples and oracle") {
    Harness H(2, 35);
    auto& s = H.session;
    hefl::Rng rng(35);
    const auto img = random_reals(rng, 2 * 5 * 5, -1, 1);
    const auto id = decoded(sec_conv2d(s, H.share(img, {1, 2, 5, 5}),
                                       H.share({1, 0, 0, 1}, {2, 2, 1, 1}), 1),
                            s.codec());
    const auto q = decoded(H.share(img), s.codec());
    CHECK(id == q);

    const auto ker = random_reals(rng, 3 * 2 * 3 * 3, -1, 1);
    for (std::size_t stride : {1u, 2u}) {
        const auto out = sec_conv2d(s, H.share(img, {1, 2, 5, 5}), H.share(ker, {3, 2, 3, 3}), stride);
        const std::size_t o = (5 - 3) / stride + 1;
        CHECK(out.shape == Shape{1, 3, o, o});
        const auto got = reconstruct(out);
        for (std::size_t oc = 0; oc < 3; ++oc)
            for (std::size_t r = 0; r < o; ++r)
                for (std::size_t c = 0; c < o; ++c) {
                    RingElement acc;
                    for (std::size_t ic = 0; ic < 2; ++ic)
                        for (std::size_t kr = 0; kr < 3; ++kr)
                            for (std::size_t kc = 0; kc < 3; ++kc)
                                acc += s.codec().encode(img[(ic * 5 + r * stride + kr) * 5 + c * stride + kc]) *
                                       s.codec().encode(ker[((oc * 2 + ic) * 3 + kr) * 3 + kc]);
                    REQUIRE(got[(oc * o + r) * o + c].as_signed() == floor_shift(acc.as_signed(), kF));
                }
    }
}

TEST_CASE("sec_avgpool and sec_bias_add") {
    Harness H(3, 36);
    auto& s = H.session;
    const std::vector<double> img{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    const auto p = decoded(sec_avgpool(s, H.share(img, {1, 1, 4, 4}), 2), s.codec());
    REQUIRE(p.size() == 4);
    const double expect[4] = {3.5, 5.5, 11.5, 13.5};
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(p[i] - expect[i]) <= 4 * kUlp);
    CHECK(code_of([&] { sec_avgpool(s, H.share(img, {1, 1, 4, 4}), 3); }) == ErrorCode::kShapeMismatch);

    const auto b = decoded(sec_bias_add(H.share({1, 2, 3, 4, 5, 6}, {2, 3}), H.share({10, 20, 30})), s.codec());
    CHECK(b == std::vector<double>{11, 22, 33, 14, 25, 36});
    const auto bc = decoded(sec_bias_add(H.share({1, 1, 1, 1, 1, 1, 1, 1}, {1, 2, 2, 2}), H.share({1, -1})), s.codec());
    CHECK(bc == std::vector<double>{2, 2, 2, 2, 0, 0, 0, 0});
}

TEST_CASE("secure ops reject foreign-session tensors") {
    Harness A(2, 37), B(2, 38);
    const auto x = A.share({1});
    CHECK(code_of([&] { sec_mul(B.session, x, x); }) == ErrorCode::kSessionMismatch);
}
