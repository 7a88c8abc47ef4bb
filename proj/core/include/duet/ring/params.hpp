#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "duet/ring/modarith.hpp"

namespace duet {

// Public protocol parameters. Every party must load identical values; the
// fingerprint is exchanged during setup to catch mismatches.
struct ProtocolParams {
  u64 p = 0;
  std::size_t N = 0;
  std::vector<u64> q_primes;
  unsigned lambda = 128;
  unsigned fp_scale = 12;
  unsigned noise_margin = 30;
  bool insecure = false;

  // Smallest prime p >= 2^p_min_bits with p = 1 (mod 2N), and the fewest
  // ~61-bit NTT primes with log2(q) >= noise_margin + log2(N) + 2 log2(p).
  static ProtocolParams generate(std::size_t N, unsigned p_min_bits, unsigned fp_scale,
                                 unsigned noise_margin = 30, bool insecure = false);
  static ProtocolParams production();     // N = 8192, 52-bit p
  static ProtocolParams standard_test();  // N = 2048, 52-bit p
  static ProtocolParams insecure_toy();   // N = 256, 30-bit p; not secure

  void validate() const;

  double log2_q() const;
  // Bit width of the FSS input domain covering Z_p.
  unsigned domain_bits() const;
  // Largest field magnitude allowed for signed plaintexts (below p/4).
  u64 magnitude_bound() const;
  u64 fingerprint() const;

  std::string to_text() const;
  static ProtocolParams from_text(const std::string& text);
  static ProtocolParams load(const std::string& path);
  void save(const std::string& path) const;

  bool operator==(const ProtocolParams&) const = default;
};

}  // namespace duet
