#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace duet {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Arithmetic modulo a fixed odd modulus below 2^63. Values are canonical
// representatives in [0, m).
class Modulus {
 public:
  Modulus() = default;
  explicit Modulus(u64 m);

  u64 value() const { return m_; }
  unsigned bits() const { return bits_; }

  u64 reduce(u64 a) const { return a % m_; }
  u64 reduce128(u128 a) const { return static_cast<u64>(a % m_); }
  u64 add(u64 a, u64 b) const {
    u64 s = a + b;
    return s >= m_ ? s - m_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + m_ - b; }
  u64 neg(u64 a) const { return a == 0 ? 0 : m_ - a; }
  u64 mul(u64 a, u64 b) const { return static_cast<u64>(static_cast<u128>(a) * b % m_); }
  u64 pow(u64 a, u64 e) const;
  // Throws ModulusError when a is not invertible.
  u64 inv(u64 a) const;

  // Centered lift: values above (m-1)/2 map to negatives.
  std::int64_t to_signed(u64 a) const {
    return a > half_ ? -static_cast<std::int64_t>(m_ - a) : static_cast<std::int64_t>(a);
  }
  u64 from_signed(std::int64_t v) const;

  // Shoup precomputation for repeated multiplication by a fixed w.
  u64 shoup(u64 w) const { return static_cast<u64>((static_cast<u128>(w) << 64) / m_); }
  u64 mul_shoup(u64 a, u64 w, u64 w_shoup) const {
    u64 q = static_cast<u64>((static_cast<u128>(a) * w_shoup) >> 64);
    u64 r = a * w - q * m_;
    return r >= m_ ? r - m_ : r;
  }

  bool operator==(const Modulus& o) const { return m_ == o.m_; }

 private:
  u64 m_ = 0;
  u64 half_ = 0;
  unsigned bits_ = 0;
};

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(u64 n);
// Smallest prime >= start with prime = 1 (mod step).
u64 next_prime_congruent_one(u64 start, u64 step);
// Largest prime < below with prime = 1 (mod step).
u64 prev_prime_congruent_one(u64 below, u64 step);
// A primitive order-th root of unity modulo a prime p (order | p-1).
u64 primitive_root_of_unity(u64 order, const Modulus& p);
// ceil(log2(x)) for x >= 1.
unsigned ceil_log2(u64 x);

// Vector helpers over Z_m.
void vec_add_inplace(std::span<u64> a, std::span<const u64> b, const Modulus& m);
void vec_sub_inplace(std::span<u64> a, std::span<const u64> b, const Modulus& m);
std::vector<u64> vec_add(std::span<const u64> a, std::span<const u64> b, const Modulus& m);
std::vector<u64> vec_sub(std::span<const u64> a, std::span<const u64> b, const Modulus& m);

}  // namespace duet
