#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "duet/common/bytes.hpp"
#include "duet/common/random.hpp"
#include "duet/fss/prg.hpp"
#include "duet/ring/modarith.hpp"

namespace duet::fss {

enum class TreeKind : std::uint8_t { Point = 1, LessThan = 2 };

struct CorrectionWord {
  Seed s{};
  bool t_left = false;
  bool t_right = false;
  std::vector<u64> v;  // LessThan trees only

  bool operator==(const CorrectionWord&) const = default;
};

// One party's key for a point function (f(alpha) = beta) or a comparison
// function (f(x) = beta for x < alpha) over [0, 2^domain_bits), with payload
// in Z_p^payload_len.
struct TreeKey {
  TreeKind kind = TreeKind::Point;
  std::uint8_t party = 0;
  u64 modulus = 0;
  std::uint32_t domain_bits = 0;
  std::uint32_t payload_len = 0;
  Seed root{};
  std::vector<CorrectionWord> cws;
  std::vector<u64> leaf;

  bool operator==(const TreeKey&) const = default;
  std::size_t size_bytes() const;
};

using DpfKey = TreeKey;
using DcfKey = TreeKey;

// Deterministic generation from explicit root seeds. Both parties' keys are
// returned; the pair depends only on the arguments.
std::pair<TreeKey, TreeKey> tree_gen(TreeKind kind, unsigned domain_bits, const Modulus& p, u64 alpha,
                                     std::span<const u64> beta, const Seed& root0, const Seed& root1);
std::vector<u64> tree_eval(const TreeKey& key, u64 x);

Seed random_seed(Rng& rng);

std::pair<DpfKey, DpfKey> dpf_gen(u64 alpha, std::span<const u64> beta, unsigned domain_bits, const Modulus& p,
                                  Rng& rng);
std::vector<u64> dpf_eval(const DpfKey& key, u64 x);

std::pair<DcfKey, DcfKey> dcf_gen(u64 alpha, std::span<const u64> beta, unsigned domain_bits, const Modulus& p,
                                  Rng& rng);
std::vector<u64> dcf_eval(const DcfKey& key, u64 x);

// Interval key: f(x) = beta on a cyclic interval of a domain of size D
// (D = 2^domain_bits or D = p). Evaluates as
//   [x < hi] - [x < lo] + wrap * beta,
// where the wrap term is secret-shared inside the key.
struct DifKey {
  DcfKey lower;
  DcfKey upper;
  std::vector<u64> offset;  // this party's share of wrap * beta

  bool operator==(const DifKey&) const = default;
  std::size_t size_bytes() const;
};

// Deterministic core shared by all interval generators: caller supplies the
// four root seeds and party 0's share of the wrap term.
std::pair<DifKey, DifKey> dif_gen_explicit(u64 lo, u64 hi, bool wrap, std::span<const u64> beta,
                                           unsigned domain_bits, const Modulus& p, const Seed roots[4],
                                           std::span<const u64> offset_share0);

// Closed interval [alpha1, alpha2] inside [0, domain_size). Throws
// ParameterError when alpha1 > alpha2 or alpha2 >= domain_size.
std::pair<DifKey, DifKey> dif_gen(u64 alpha1, u64 alpha2, std::span<const u64> beta, u64 domain_size,
                                  unsigned domain_bits, const Modulus& p, Rng& rng);
// Cyclic half-open interval {lo, lo+1, ..., hi-1} mod domain_size; lo != hi.
std::pair<DifKey, DifKey> dif_gen_cyclic(u64 lo, u64 hi, std::span<const u64> beta, u64 domain_size,
                                         unsigned domain_bits, const Modulus& p, Rng& rng);
std::vector<u64> dif_eval(const DifKey& key, u64 x);

void write_tree_key(ByteWriter& w, const TreeKey& k);
TreeKey read_tree_key(ByteReader& r);
void write_dif_key(ByteWriter& w, const DifKey& k);
DifKey read_dif_key(ByteReader& r);
Bytes serialize_key(const TreeKey& k);
TreeKey deserialize_tree_key(std::span<const std::uint8_t> b);
Bytes serialize_key(const DifKey& k);
DifKey deserialize_dif_key(std::span<const std::uint8_t> b);

}  // namespace duet::fss
