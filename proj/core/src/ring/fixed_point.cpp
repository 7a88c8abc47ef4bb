#include "duet/ring/fixed_point.hpp"

#include <cmath>

#include "duet/common/error.hpp"

namespace duet {

FixedPoint::FixedPoint(const Modulus& p, unsigned frac_bits, u64 magnitude_bound)
    : p_(p), f_(frac_bits), bound_(magnitude_bound) {
  if (frac_bits >= 62) throw ParameterError("fractional bits too large");
  if (magnitude_bound >= p.value() / 4 + 1 || magnitude_bound == 0) {
    throw ParameterError("magnitude bound must lie in (0, p/4)");
  }
}

FixedPoint::FixedPoint(const Modulus& p, unsigned frac_bits) : FixedPoint(p, frac_bits, p.value() / 4 - 1) {}

double FixedPoint::max_real() const { return std::ldexp(static_cast<double>(bound_), -static_cast<int>(f_)); }

u64 FixedPoint::encode(double x) const { return encode_scaled(x, f_); }

double FixedPoint::decode(u64 e) const { return decode_scaled(e, f_); }

u64 FixedPoint::encode_scaled(double x, unsigned frac_bits) const {
  if (!std::isfinite(x)) throw RangeError("cannot encode a non-finite value");
  long double v = std::nearbyintl(std::ldexp(static_cast<long double>(x), static_cast<int>(frac_bits)));
  if (std::fabs(v) > static_cast<long double>(bound_)) throw RangeError("value exceeds the fixed-point magnitude bound");
  return p_.from_signed(static_cast<std::int64_t>(v));
}

double FixedPoint::decode_scaled(u64 e, unsigned frac_bits) const {
  if (e >= p_.value()) throw RangeError("field element not reduced");
  return std::ldexp(static_cast<double>(p_.to_signed(e)), -static_cast<int>(frac_bits));
}

std::vector<u64> FixedPoint::encode(std::span<const double> xs) const {
  std::vector<u64> r;
  r.reserve(xs.size());
  for (double x : xs) r.push_back(encode(x));
  return r;
}

std::vector<double> FixedPoint::decode(std::span<const u64> es) const {
  std::vector<double> r;
  r.reserve(es.size());
  for (u64 e : es) r.push_back(decode(e));
  return r;
}

u64 truncate_share(int party, u64 share, unsigned f, const Modulus& p) {
  if (party == 0) return share >> f;
  return p.neg(p.sub(0, share) >> f);
}

void truncate_shares(int party, std::span<u64> shares, unsigned f, const Modulus& p) {
  for (auto& s : shares) s = truncate_share(party, s, f, p);
}

u64 truncate_public(u64 value, unsigned f, const Modulus& p) {
  std::int64_t v = p.to_signed(value);
  // Arithmetic shift is floor division for negative values.
  return p.from_signed(v >> f);
}

}  // namespace duet
