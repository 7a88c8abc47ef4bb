#pragma once

#include <span>
#include <vector>

#include "duet/ring/modarith.hpp"

namespace duet {

// Signed fixed-point values embedded in Z_p: x -> round(x * 2^f) mod p, with
// [0, p/2) holding non-negative values.
class FixedPoint {
 public:
  FixedPoint(const Modulus& p, unsigned frac_bits, u64 magnitude_bound);
  // Default bound: p/4 - 1.
  FixedPoint(const Modulus& p, unsigned frac_bits);

  const Modulus& modulus() const { return p_; }
  unsigned frac_bits() const { return f_; }
  u64 magnitude_bound() const { return bound_; }
  double max_real() const;

  // Throws RangeError when |round(x * 2^f)| exceeds the magnitude bound.
  u64 encode(double x) const;
  double decode(u64 e) const;
  // Integer-valued encoding at an explicit scale (used for products).
  u64 encode_scaled(double x, unsigned frac_bits) const;
  double decode_scaled(u64 e, unsigned frac_bits) const;

  std::vector<u64> encode(std::span<const double> xs) const;
  std::vector<double> decode(std::span<const u64> es) const;

 private:
  Modulus p_;
  unsigned f_;
  u64 bound_;
};

// Local probabilistic truncation of an additive share by 2^f. Party 0 takes
// floor(z0 / 2^f); party 1 takes -floor((p - z1) / 2^f). The reconstructed
// result is floor(z / 2^f) up to +-1, except with probability about |z|/p.
u64 truncate_share(int party, u64 share, unsigned f, const Modulus& p);
void truncate_shares(int party, std::span<u64> shares, unsigned f, const Modulus& p);

// Exact truncation of a public signed value: floor(x / 2^f) as a field element.
u64 truncate_public(u64 value, unsigned f, const Modulus& p);

}  // namespace duet
