#pragma once

#include <span>
#include <vector>

#include "duet/ring/modarith.hpp"

namespace duet {

// Negacyclic NTT over Z_m[X]/(X^N + 1) for prime m = 1 (mod 2N). The forward
// transform leaves evaluations in bit-reversed order; inverse undoes it.
class NttTables {
 public:
  NttTables(std::size_t n, const Modulus& m);

  std::size_t size() const { return n_; }
  const Modulus& modulus() const { return m_; }
  u64 psi() const { return psi_; }

  void forward(std::span<u64> a) const;
  void inverse(std::span<u64> a) const;

 private:
  std::size_t n_;
  Modulus m_;
  u64 psi_;
  u64 n_inv_, n_inv_shoup_;
  std::vector<u64> psi_rev_, psi_rev_shoup_;
  std::vector<u64> ipsi_rev_, ipsi_rev_shoup_;
};

// Schoolbook negacyclic product; O(N^2), used as a test oracle and for tiny N.
std::vector<u64> negacyclic_mul_naive(std::span<const u64> a, std::span<const u64> b, const Modulus& m);

}  // namespace duet
