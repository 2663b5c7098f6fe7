#include "hefl/secure_ops.hpp"

#include <algorithm>
#include <string>

#include "hefl/conversion.hpp"

namespace hefl {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

namespace {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

void same_layout(const SecureTensor& x, const SecureTensor& y) {
    require(x.shape == y.shape, ErrorCode::kShapeMismatch,
            "shape " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    require(x.parties() == y.parties(), ErrorCode::kLengthMismatch, "party counts differ");
    for (std::size_t p = 0; p < x.parties(); ++p)
        require(x.shares[p].session == y.shares[p].session, ErrorCode::kSessionMismatch,
                "operands come from different sessions");
}

SecureTensor like(const SecureTensor& x, Shape shape, int frac_bits) {
    SecureTensor out;
    out.shape = std::move(shape);
    out.frac_bits = frac_bits;
    out.shares.resize(x.parties());
    const std::size_t n = shape_size(out.shape);
    for (std::size_t p = 0; p < x.parties(); ++p) {
        out.shares[p].owner = x.shares[p].owner;
        out.shares[p].session = x.shares[p].session;
        out.shares[p].elems.assign(n, RingElement());
    }
    return out;
}

void require_frac(const SecureTensor& x, int want, const char* op) {
    require(x.frac_bits == want, ErrorCode::kPrecisionMismatch,
            std::string(op) + " expects " + std::to_string(want) + " fractional bits, got " +
                std::to_string(x.frac_bits));
}

}  // namespace

SecureTensor share_tensor(MpcSession& s, std::uint32_t holder, Shape shape,
                          std::span<const RingElement> values, int frac_bits, MessageKind kind) {
    require(shape_size(shape) == values.size(), ErrorCode::kShapeMismatch,
            "value count does not match shape " + shape_str(shape));
    SecureTensor t;
    t.shape = std::move(shape);
    t.frac_bits = frac_bits;
    t.shares = s.reshare(holder, values);
    if (MessageLog* log = s.log()) {
        for (std::uint32_t p = 0; p < s.parties(); ++p) {
            if (p == holder) continue;
            std::span<const std::uint64_t> words(reinterpret_cast<const std::uint64_t*>(t.shares[p].elems.data()),
                                                 values.size());
            log->send(s.actor(holder), s.actor(p), kind, words);
        }
    }
    return t;
}

std::vector<RingElement> reconstruct(const SecureTensor& x) { return reconstruct_arithmetic(x.shares); }

std::vector<double> reconstruct_real(const SecureTensor& x, const FixedPointCodec& codec) {
    const auto r = reconstruct(x);
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = codec.decode_with(r[i], x.frac_bits);
    return out;
}

SecureTensor sec_add(const SecureTensor& x, const SecureTensor& y) {
    same_layout(x, y);
    require_frac(y, x.frac_bits, "sec_add");
    SecureTensor out = x;
    for (std::size_t p = 0; p < x.parties(); ++p)
        for (std::size_t i = 0; i < x.size(); ++i) out.shares[p].elems[i] += y.shares[p].elems[i];
    return out;
}

SecureTensor sec_sub(const SecureTensor& x, const SecureTensor& y) {
    same_layout(x, y);
    require_frac(y, x.frac_bits, "sec_sub");
    SecureTensor out = x;
    for (std::size_t p = 0; p < x.parties(); ++p)
        for (std::size_t i = 0; i < x.size(); ++i) out.shares[p].elems[i] -= y.shares[p].elems[i];
    return out;
}

SecureTensor sec_add_public(const SecureTensor& x, std::span<const RingElement> c) {
    require(c.size() == x.size(), ErrorCode::kShapeMismatch, "public addend has wrong length");
    SecureTensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) out.shares[0].elems[i] += c[i];
    return out;
}

SecureTensor sec_scale_public(const SecureTensor& x, RingElement c, int c_frac) {
    SecureTensor out = x;
    out.frac_bits = x.frac_bits + c_frac;
    for (auto& sh : out.shares)
        for (auto& e : sh.elems) e *= c;
    return out;
}

SecureTensor sec_not(const SecureTensor& bits) {
    require_frac(bits, 0, "sec_not");
    SecureTensor out = bits;
    for (std::size_t p = 0; p < out.parties(); ++p)
        for (auto& e : out.shares[p].elems) e = (p == 0 ? RingElement(1) : RingElement(0)) - e;
    return out;
}

SecureTensor sec_mul(MpcSession& s, const SecureTensor& x, const SecureTensor& y, BeaverTriples& t) {
    same_layout(x, y);
    s.check(x.shares);
    const int frac = x.frac_bits + y.frac_bits;
    require(frac <= 2 * s.frac_bits(), ErrorCode::kPrecisionMismatch,
            "product would carry " + std::to_string(frac) + " fractional bits; truncate first");
    const std::size_t n = x.size();
    require(t.count == n, ErrorCode::kLengthMismatch, "beaver batch size does not match operand");
    t.consume("beaver triples");

    const std::size_t h = s.parties();
    ArithmeticSharing masked(h);
    for (std::size_t p = 0; p < h; ++p) {
        masked[p] = ArithmeticShareVector{x.shares[p].owner, s.id(), std::vector<RingElement>(2 * n)};
        for (std::size_t i = 0; i < n; ++i) {
            masked[p].elems[i] = x.shares[p].elems[i] - t.a[p].elems[i];
            masked[p].elems[n + i] = y.shares[p].elems[i] - t.b[p].elems[i];
        }
    }
    const auto ed = s.open(masked, MessageKind::kBeaverOpen);

    SecureTensor out = like(x, x.shape, frac);
    for (std::size_t p = 0; p < h; ++p)
        for (std::size_t i = 0; i < n; ++i) {
            const RingElement eps = ed[i], del = ed[n + i];
            RingElement z = t.c[p].elems[i] + eps * t.b[p].elems[i] + t.a[p].elems[i] * del;
            if (p == 0) z += eps * del;
            out.shares[p].elems[i] = z;
        }
    return out;
}

SecureTensor sec_mul(MpcSession& s, const SecureTensor& x, const SecureTensor& y) {
    auto t = s.beaver(x.size());
    return sec_mul(s, x, y, t);
}

SecureTensor sec_truncate(MpcSession& s, const SecureTensor& x, TruncationPairs& pairs) {
    s.check(x.shares);
    const int f = s.frac_bits();
    require_frac(x, 2 * f, "sec_truncate");
    const std::size_t n = x.size();
    require(pairs.count == n && pairs.shift == f, ErrorCode::kLengthMismatch,
            "truncation batch does not match operand");
    pairs.consume("truncation pairs");

    // x + 2^50 lies in [0, 2^51) and r in [0, 2^63), so the opened sum never wraps.
    const RingElement bias(std::uint64_t{1} << kTruncValueBits);
    const std::size_t h = s.parties();
    ArithmeticSharing masked(h);
    for (std::size_t p = 0; p < h; ++p) {
        masked[p] = ArithmeticShareVector{x.shares[p].owner, s.id(), std::vector<RingElement>(n)};
        for (std::size_t i = 0; i < n; ++i) {
            masked[p].elems[i] = x.shares[p].elems[i] + pairs.r[p].elems[i];
            if (p == 0) masked[p].elems[i] += bias;
        }
    }
    const auto c = s.open(masked, MessageKind::kTruncOpen);

    // (c >> f) overshoots by the carry [c mod 2^f < r mod 2^f], computed as
    // the borrow out of the public low bits minus the shared ones.
    BinarySharing borrow(h), bit(h);
    for (std::size_t p = 0; p < h; ++p) {
        borrow[p] = BinaryShareVector{x.shares[p].owner, s.id(), std::vector<std::uint64_t>(n, 0)};
        bit[p] = borrow[p];
    }
    for (int i = 0; i < f; ++i) {
        for (std::size_t p = 0; p < h; ++p)
            for (std::size_t k = 0; k < n; ++k) bit[p].bits[k] = (pairs.r_low[p].bits[k] >> i) & 1;
        BinarySharing g;
        if (i > 0) g = binary_and_slice(s, bit, borrow, pairs.carry_triples, static_cast<std::size_t>(i - 1) * n);
        for (std::size_t p = 0; p < h; ++p)
            for (std::size_t k = 0; k < n; ++k) {
                const std::uint64_t gk = i > 0 ? g[p].bits[k] & 1 : 0;
                const bool public_bit = (c[k].value >> i) & 1;
                borrow[p].bits[k] = public_bit ? gk : bit[p].bits[k] ^ borrow[p].bits[k] ^ gk;
            }
    }
    const ArithmeticSharing carry = b2a(s, borrow, pairs.carry_pairs, 1);

    SecureTensor out = like(x, x.shape, f);
    const RingElement bias_low(std::uint64_t{1} << (kTruncValueBits - f));
    for (std::size_t p = 0; p < h; ++p)
        for (std::size_t i = 0; i < n; ++i) {
            RingElement v = RingElement(0) - pairs.r_trunc[p].elems[i] - carry[p].elems[i];
            if (p == 0) v += RingElement(c[i].value >> f) - bias_low;
            out.shares[p].elems[i] = v;
        }
    return out;
}

SecureTensor sec_truncate(MpcSession& s, const SecureTensor& x) {
    auto pairs = s.trunc_pairs(x.size(), s.frac_bits());
    return sec_truncate(s, x, pairs);
}

SecureTensor sec_ltz(MpcSession& s, const SecureTensor& z) {
    s.check(z.shares);
    const std::size_t n = z.size();
    SecureTensor out = like(z, z.shape, 0);
    // Elementwise, so chunking bounds the dealer material held at once.
    for (std::size_t start = 0; start < n; start += kLtzChunk) {
        const std::size_t len = std::min(kLtzChunk, n - start);
        ArithmeticSharing part(s.parties());
        for (std::size_t p = 0; p < s.parties(); ++p) {
            const auto& src = z.shares[p].elems;
            part[p] = ArithmeticShareVector{z.shares[p].owner, s.id(),
                                            std::vector<RingElement>(src.begin() + static_cast<std::ptrdiff_t>(start),
                                                                     src.begin() + static_cast<std::ptrdiff_t>(start + len))};
        }
        BinarySharing bits = a2b(s, part);
        for (auto& sh : bits)
            for (auto& w : sh.bits) w >>= 63;
        const ArithmeticSharing sign = b2a(s, bits, 1);
        for (std::size_t p = 0; p < s.parties(); ++p)
            std::copy(sign[p].elems.begin(), sign[p].elems.end(),
                      out.shares[p].elems.begin() + static_cast<std::ptrdiff_t>(start));
    }
    return out;
}

SecureTensor sec_compare(MpcSession& s, const SecureTensor& x, const SecureTensor& y) {
    return sec_ltz(s, sec_sub(x, y));
}

SecureTensor sec_relu(MpcSession& s, const SecureTensor& x) {
    require(x.frac_bits == s.frac_bits(), ErrorCode::kPrecisionMismatch, "relu input must carry f fractional bits");
    return sec_mul(s, x, sec_not(sec_ltz(s, x)));
}

namespace {

// Gathers operand pairs into flat tensors, multiplies them elementwise and
// sums each group of `group` consecutive products.
SecureTensor product_sums(MpcSession& s, const SecureTensor& a, const SecureTensor& b,
                          const std::vector<std::size_t>& ia, const std::vector<std::size_t>& ib,
                          std::size_t group, Shape out_shape) {
    const std::size_t m = ia.size();
    SecureTensor ga = like(a, Shape{m}, a.frac_bits), gb = like(b, Shape{m}, b.frac_bits);
    for (std::size_t p = 0; p < a.parties(); ++p)
        for (std::size_t k = 0; k < m; ++k) {
            ga.shares[p].elems[k] = a.shares[p].elems[ia[k]];
            gb.shares[p].elems[k] = b.shares[p].elems[ib[k]];
        }
    const SecureTensor prod = sec_mul(s, ga, gb);
    SecureTensor out = like(a, std::move(out_shape), prod.frac_bits);
    for (std::size_t p = 0; p < a.parties(); ++p)
        for (std::size_t k = 0; k < m; ++k) out.shares[p].elems[k / group] += prod.shares[p].elems[k];
    return out;
}

void require_operands(const MpcSession& s, const SecureTensor& x, const SecureTensor& w) {
    s.check(x.shares);
    s.check(w.shares);
    require_frac(x, s.frac_bits(), "linear layer input");
    require_frac(w, s.frac_bits(), "linear layer weights");
}

}  // namespace

SecureTensor sec_matmul(MpcSession& s, const SecureTensor& x, const SecureTensor& w) {
    require_operands(s, x, w);
    require(w.shape.size() == 2, ErrorCode::kShapeMismatch, "weights must be [k, m]");
    const bool vec = x.shape.size() == 1;
    require(vec || x.shape.size() == 2, ErrorCode::kShapeMismatch, "input must be [k] or [n, k]");
    const std::size_t n = vec ? 1 : x.shape[0];
    const std::size_t k = x.shape.back(), m = w.shape[1];
    require(w.shape[0] == k, ErrorCode::kShapeMismatch,
            "matmul " + shape_str(x.shape) + " x " + shape_str(w.shape));

    std::vector<std::size_t> ia, ib;
    ia.reserve(n * m * k);
    ib.reserve(n * m * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t l = 0; l < k; ++l) {
                ia.push_back(i * k + l);
                ib.push_back(l * m + j);
            }
    Shape out_shape = vec ? Shape{m} : Shape{n, m};
    return sec_truncate(s, product_sums(s, x, w, ia, ib, k, std::move(out_shape)));
}

SecureTensor sec_conv2d(MpcSession& s, const SecureTensor& x, const SecureTensor& kernels,
                        std::size_t stride) {
    require_operands(s, x, kernels);
    require(x.shape.size() == 4 && kernels.shape.size() == 4, ErrorCode::kShapeMismatch,
            "conv2d expects [n,c,H,W] input and [oc,c,k,k] kernels");
    require(stride >= 1, ErrorCode::kInvalidArgument, "stride must be positive");
    const std::size_t n = x.shape[0], c = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t oc = kernels.shape[0], kk = kernels.shape[2];
    require(kernels.shape[1] == c && kernels.shape[3] == kk && kk <= H && kk <= W, ErrorCode::kShapeMismatch,
            "conv2d " + shape_str(x.shape) + " with kernels " + shape_str(kernels.shape));
    const std::size_t oh = (H - kk) / stride + 1, ow = (W - kk) / stride + 1;
    const std::size_t group = c * kk * kk;

    std::vector<std::size_t> ia, ib;
    ia.reserve(n * oc * oh * ow * group);
    ib.reserve(n * oc * oh * ow * group);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t xx = 0; xx < ow; ++xx)
                    for (std::size_t ch = 0; ch < c; ++ch)
                        for (std::size_t u = 0; u < kk; ++u)
                            for (std::size_t v = 0; v < kk; ++v) {
                                ia.push_back(((b * c + ch) * H + y * stride + u) * W + xx * stride + v);
                                ib.push_back(((o * c + ch) * kk + u) * kk + v);
                            }
    return sec_truncate(s, product_sums(s, x, kernels, ia, ib, group, Shape{n, oc, oh, ow}));
}

SecureTensor sec_avgpool(MpcSession& s, const SecureTensor& x, std::size_t window) {
    s.check(x.shares);
    require_frac(x, s.frac_bits(), "sec_avgpool");
    require(x.shape.size() == 4, ErrorCode::kShapeMismatch, "avgpool expects [n,c,H,W]");
    require(window >= 1 && x.shape[2] % window == 0 && x.shape[3] % window == 0, ErrorCode::kShapeMismatch,
            "pool window must divide the spatial size");
    const std::size_t n = x.shape[0], c = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t oh = H / window, ow = W / window;
    SecureTensor sum = like(x, Shape{n, c, oh, ow}, x.frac_bits);
    for (std::size_t p = 0; p < x.parties(); ++p)
        for (std::size_t plane = 0; plane < n * c; ++plane)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t xx = 0; xx < W; ++xx)
                    sum.shares[p].elems[(plane * oh + y / window) * ow + xx / window] +=
                        x.shares[p].elems[(plane * H + y) * W + xx];
    const RingElement inv = s.codec().encode(1.0 / static_cast<double>(window * window));
    return sec_truncate(s, sec_scale_public(sum, inv, s.frac_bits()));
}

SecureTensor sec_bias_add(const SecureTensor& x, const SecureTensor& b) {
    require(b.shape.size() == 1 && x.shape.size() >= 2 && x.shape[1] == b.shape[0], ErrorCode::kShapeMismatch,
            "bias " + shape_str(b.shape) + " does not broadcast over " + shape_str(x.shape));
    require_frac(b, x.frac_bits, "sec_bias_add");
    require(x.parties() == b.parties(), ErrorCode::kLengthMismatch, "party counts differ");
    std::size_t inner = 1;
    for (std::size_t d = 2; d < x.shape.size(); ++d) inner *= x.shape[d];
    const std::size_t channels = x.shape[1];
    SecureTensor out = x;
    for (std::size_t p = 0; p < x.parties(); ++p)
        for (std::size_t i = 0; i < x.size(); ++i)
            out.shares[p].elems[i] += b.shares[p].elems[(i / inner) % channels];
    return out;
}

}  // namespace hefl
