#include "hefl/ring.hpp"

#include <cmath>
#include <sstream>

#include "hefl/error.hpp"

namespace hefl {

double FixedPointCodec::max_magnitude() const { return std::ldexp(1.0, 63 - frac_bits - 1); }

RingElement FixedPointCodec::encode(double x) const {
    if (!std::isfinite(x) || std::fabs(x) >= max_magnitude()) {
        std::ostringstream msg;
        msg << "value " << x << " not encodable with " << frac_bits << " fractional bits";
        fail(ErrorCode::kOverflow, msg.str());
    }
    return RingElement::from_signed(std::llround(std::ldexp(x, frac_bits)));
}

double FixedPointCodec::decode(RingElement r) const { return decode_with(r, frac_bits); }

double FixedPointCodec::decode_with(RingElement r, int bits) const {
    return std::ldexp(static_cast<double>(r.as_signed()), -bits);
}

std::vector<RingElement> FixedPointCodec::encode(std::span<const double> xs) const {
    std::vector<RingElement> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(encode(x));
    return out;
}

std::vector<double> FixedPointCodec::decode(std::span<const RingElement> rs) const {
    std::vector<double> out;
    out.reserve(rs.size());
    for (RingElement r : rs) out.push_back(decode(r));
    return out;
}

RingElement encode_fixed(double x, const FixedPointCodec& codec) { return codec.encode(x); }
double decode_fixed(RingElement r, const FixedPointCodec& codec) { return codec.decode(r); }

}  // namespace hefl
