#include "duet/ring/ntt.hpp"

#include <bit>

#include "duet/common/error.hpp"

namespace duet {

namespace {

std::size_t bit_reverse(std::size_t x, unsigned bits) {
  std::size_t r = 0;
  for (unsigned i = 0; i < bits; ++i) {
    r = (r << 1) | (x & 1);
    x >>= 1;
  }
  return r;
}

}  // namespace

NttTables::NttTables(std::size_t n, const Modulus& m) : n_(n), m_(m) {
  if (n < 2 || !std::has_single_bit(n)) throw ParameterError("ring degree must be a power of two");
  if ((m.value() - 1) % (2 * n) != 0) throw ModulusError("modulus is not 1 mod 2N");
  psi_ = primitive_root_of_unity(2 * n, m);
  u64 ipsi = m.inv(psi_);
  unsigned logn = static_cast<unsigned>(std::countr_zero(n));
  psi_rev_.resize(n);
  ipsi_rev_.resize(n);
  psi_rev_shoup_.resize(n);
  ipsi_rev_shoup_.resize(n);
  u64 pw = 1, ipw = 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = bit_reverse(i, logn);
    psi_rev_[r] = pw;
    ipsi_rev_[r] = ipw;
    pw = m.mul(pw, psi_);
    ipw = m.mul(ipw, ipsi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    psi_rev_shoup_[i] = m.shoup(psi_rev_[i]);
    ipsi_rev_shoup_[i] = m.shoup(ipsi_rev_[i]);
  }
  n_inv_ = m.inv(n % m.value());
  n_inv_shoup_ = m.shoup(n_inv_);
}

void NttTables::forward(std::span<u64> a) const {
  if (a.size() != n_) throw DimensionError("NTT input length mismatch");
  std::size_t t = n_;
  for (std::size_t mm = 1; mm < n_; mm <<= 1) {
    t >>= 1;
    for (std::size_t i = 0; i < mm; ++i) {
      std::size_t j1 = 2 * i * t;
      u64 s = psi_rev_[mm + i], ss = psi_rev_shoup_[mm + i];
      for (std::size_t j = j1; j < j1 + t; ++j) {
        u64 u = a[j];
        u64 v = m_.mul_shoup(a[j + t], s, ss);
        a[j] = m_.add(u, v);
        a[j + t] = m_.sub(u, v);
      }
    }
  }
}

void NttTables::inverse(std::span<u64> a) const {
  if (a.size() != n_) throw DimensionError("NTT input length mismatch");
  std::size_t t = 1;
  for (std::size_t mm = n_; mm > 1; mm >>= 1) {
    std::size_t h = mm >> 1;
    std::size_t j1 = 0;
    for (std::size_t i = 0; i < h; ++i) {
      u64 s = ipsi_rev_[h + i], ss = ipsi_rev_shoup_[h + i];
      for (std::size_t j = j1; j < j1 + t; ++j) {
        u64 u = a[j];
        u64 v = a[j + t];
        a[j] = m_.add(u, v);
        a[j + t] = m_.mul_shoup(m_.sub(u, v), s, ss);
      }
      j1 += 2 * t;
    }
    t <<= 1;
  }
  for (auto& x : a) x = m_.mul_shoup(x, n_inv_, n_inv_shoup_);
}

std::vector<u64> negacyclic_mul_naive(std::span<const u64> a, std::span<const u64> b, const Modulus& m) {
  if (a.size() != b.size()) throw DimensionError("polynomial degree mismatch");
  std::size_t n = a.size();
  std::vector<u64> r(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      u64 prod = m.mul(a[i], b[j]);
      std::size_t k = i + j;
      if (k < n) {
        r[k] = m.add(r[k], prod);
      } else {
        r[k - n] = m.sub(r[k - n], prod);
      }
    }
  }
  return r;
}

}  // namespace duet
