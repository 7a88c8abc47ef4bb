#include "duet/ring/modarith.hpp"

#include <bit>

#include "duet/common/error.hpp"

namespace duet {

Modulus::Modulus(u64 m) : m_(m), half_((m - 1) / 2), bits_(static_cast<unsigned>(std::bit_width(m))) {
  if (m < 2 || m >= (1ULL << 63)) throw ModulusError("modulus must lie in [2, 2^63)");
}

u64 Modulus::pow(u64 a, u64 e) const {
  u64 r = 1 % m_;
  a %= m_;
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

u64 Modulus::inv(u64 a) const {
  // Extended Euclid so that composite moduli are handled too.
  std::int64_t t = 0, nt = 1;
  u128 r = m_, nr = a % m_;
  while (nr != 0) {
    u128 q = r / nr;
    std::int64_t tmp = t - static_cast<std::int64_t>(q) * nt;
    t = nt;
    nt = tmp;
    u128 rr = r - q * nr;
    r = nr;
    nr = rr;
  }
  if (r != 1) throw ModulusError("element is not invertible");
  return t < 0 ? static_cast<u64>(t + static_cast<std::int64_t>(m_)) : static_cast<u64>(t);
}

u64 Modulus::from_signed(std::int64_t v) const {
  if (v >= 0) return static_cast<u64>(v) % m_;
  u64 mag = static_cast<u64>(-(v + 1)) + 1;
  return neg(mag % m_);
}

bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 sp : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % sp == 0) return n == sp;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  auto mulm = [n](u64 a, u64 b) { return static_cast<u64>(static_cast<u128>(a) * b % n); };
  auto powm = [&](u64 a, u64 e) {
    u64 r = 1;
    while (e) {
      if (e & 1) r = mulm(r, a);
      a = mulm(a, a);
      e >>= 1;
    }
    return r;
  };
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powm(a, d);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulm(x, x);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

u64 next_prime_congruent_one(u64 start, u64 step) {
  u64 c = start <= 1 ? 1 : ((start - 1 + step - 1) / step) * step + 1;
  for (;; c += step) {
    if (c >= (1ULL << 63)) throw ParameterError("no prime found below 2^63");
    if (is_prime(c)) return c;
  }
}

u64 prev_prime_congruent_one(u64 below, u64 step) {
  if (below <= step) throw ParameterError("no prime found");
  u64 c = ((below - 2) / step) * step + 1;
  for (; c > step; c -= step) {
    if (is_prime(c)) return c;
  }
  throw ParameterError("no prime found");
}

u64 primitive_root_of_unity(u64 order, const Modulus& p) {
  u64 pm1 = p.value() - 1;
  if (order == 0 || pm1 % order != 0) throw ParameterError("root order does not divide p-1");
  // Distinct prime factors of order; order is a power of two times small
  // factors in practice, but handle the general case.
  std::vector<u64> factors;
  u64 o = order;
  for (u64 f = 2; f * f <= o; ++f) {
    if (o % f == 0) {
      factors.push_back(f);
      while (o % f == 0) o /= f;
    }
  }
  if (o > 1) factors.push_back(o);
  for (u64 g = 2; g < p.value(); ++g) {
    u64 w = p.pow(g, pm1 / order);
    bool ok = true;
    for (u64 f : factors) {
      if (p.pow(w, order / f) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) return w;
  }
  throw ParameterError("no primitive root found");
}

unsigned ceil_log2(u64 x) {
  if (x <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(x - 1));
}

void vec_add_inplace(std::span<u64> a, std::span<const u64> b, const Modulus& m) {
  if (a.size() != b.size()) throw DimensionError("vector length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = m.add(a[i], b[i]);
}

void vec_sub_inplace(std::span<u64> a, std::span<const u64> b, const Modulus& m) {
  if (a.size() != b.size()) throw DimensionError("vector length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = m.sub(a[i], b[i]);
}

std::vector<u64> vec_add(std::span<const u64> a, std::span<const u64> b, const Modulus& m) {
  std::vector<u64> r(a.begin(), a.end());
  vec_add_inplace(r, b, m);
  return r;
}

std::vector<u64> vec_sub(std::span<const u64> a, std::span<const u64> b, const Modulus& m) {
  std::vector<u64> r(a.begin(), a.end());
  vec_sub_inplace(r, b, m);
  return r;
}

}  // namespace duet
