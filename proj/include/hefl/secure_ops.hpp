#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hefl/session.hpp"
#include "hefl/sharing.hpp"

namespace hefl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

/// Arithmetic-shared tensor. frac_bits is 0 for {0,1} comparison results,
/// f for regular values, and 2f for unrenormalized products.
struct SecureTensor {
    Shape shape;
    ArithmeticSharing shares;
    int frac_bits = 0;

    std::size_t size() const { return shape_size(shape); }
    std::size_t parties() const { return shares.size(); }
};

/// Secret of `holder` shared through the session's zero-sharer; the holder's
/// delivery of each share is logged under `kind`.
SecureTensor share_tensor(MpcSession& s, std::uint32_t holder, Shape shape,
                          std::span<const RingElement> values, int frac_bits,
                          MessageKind kind = MessageKind::kInputShare);

/// Local reconstruction (what every party would see after an open).
std::vector<RingElement> reconstruct(const SecureTensor& x);
std::vector<double> reconstruct_real(const SecureTensor& x, const FixedPointCodec& codec);

SecureTensor sec_add(const SecureTensor& x, const SecureTensor& y);
SecureTensor sec_sub(const SecureTensor& x, const SecureTensor& y);
SecureTensor sec_add_public(const SecureTensor& x, std::span<const RingElement> c);
/// Multiply by a public constant carrying `c_frac` fractional bits.
SecureTensor sec_scale_public(const SecureTensor& x, RingElement c, int c_frac);
/// 1 - b for a {0,1} tensor.
SecureTensor sec_not(const SecureTensor& bits);

/// Beaver multiplication; opens epsilon and delta only.
SecureTensor sec_mul(MpcSession& s, const SecureTensor& x, const SecureTensor& y,
                     BeaverTriples& triples);
SecureTensor sec_mul(MpcSession& s, const SecureTensor& x, const SecureTensor& y);

/// Largest |x| (in raw 2f units, i.e. |x| < 2^50) the truncation handles.
inline constexpr int kTruncValueBits = 50;

/// Renormalize a 2f tensor to f. Result is exactly floor(x / 2^f).
SecureTensor sec_truncate(MpcSession& s, const SecureTensor& x, TruncationPairs& pairs);
SecureTensor sec_truncate(MpcSession& s, const SecureTensor& x);

/// Elements per A2B batch inside sec_ltz.
inline constexpr std::size_t kLtzChunk = 4096;

/// [z < 0] via A2B, sign-bit extraction and a one-bit B2A.
SecureTensor sec_ltz(MpcSession& s, const SecureTensor& z);
SecureTensor sec_compare(MpcSession& s, const SecureTensor& x, const SecureTensor& y);
/// max(x, 0) computed as x * (1 - [x < 0]).
SecureTensor sec_relu(MpcSession& s, const SecureTensor& x);

/// x: [n, k] (or [k]), w: [k, m] -> [n, m] at precision f.
SecureTensor sec_matmul(MpcSession& s, const SecureTensor& x, const SecureTensor& w);
/// x: [n, c, H, W], kernels: [oc, c, k, k], no padding -> [n, oc, oh, ow].
SecureTensor sec_conv2d(MpcSession& s, const SecureTensor& x, const SecureTensor& kernels,
                        std::size_t stride);
/// Non-overlapping window x window mean over [n, c, H, W].
SecureTensor sec_avgpool(MpcSession& s, const SecureTensor& x, std::size_t window);
/// b broadcast along axis 1 of x ([n, m] + [m] or [n, c, H, W] + [c]).
SecureTensor sec_bias_add(const SecureTensor& x, const SecureTensor& b);

}  // namespace hefl
