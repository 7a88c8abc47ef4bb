#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "duet/common/random.hpp"
#include "duet/ring/modarith.hpp"
#include "duet/tee/bitvec.hpp"
#include "duet/transport/channel.hpp"

namespace duet::tee {

// Party i holds components (x_i, x_{i+1}) of x = x_0 ^ x_1 ^ x_2.
struct BShare {
  BitVec a, b;
  std::size_t size() const { return a.size(); }
  BShare slice(std::size_t off, std::size_t len) const { return {a.slice(off, len), b.slice(off, len)}; }
  void append(const BShare& o) {
    a.append(o.a);
    b.append(o.b);
  }
  BShare broadcast(std::size_t width) const { return {a.broadcast(width), b.broadcast(width)}; }
};
BShare operator^(const BShare& x, const BShare& y);
// AND with a public bit string is local.
BShare operator&(const BShare& x, const BitVec& pub);

// Replicated additive sharing mod p, same component layout.
struct AShare {
  std::vector<u64> a, b;
  std::size_t size() const { return a.size(); }
};

struct Party3Stats {
  std::uint64_t and_gates = 0;
  std::uint64_t mults = 0;
  std::uint64_t rounds = 0;
  // PRG block expansions observed while a 3PC operation was running.
  std::uint64_t prg_calls_in_protocol = 0;

  Party3Stats& operator+=(const Party3Stats& o);
};

// One of three semi-honest parties. Every interactive operation is one
// round: each party sends one frame to a neighbour and receives one.
class Party3 {
 public:
  Party3(unsigned index, transport::Channel& prev, transport::Channel& next, const Modulus& p);

  // Exchanges pairwise zero-sharing keys with the neighbours. Must run once
  // on all three parties before any interactive operation.
  void setup(const Block& own_key);

  unsigned index() const { return i_; }
  const Modulus& modulus() const { return p_; }
  const Party3Stats& stats() const { return stats_; }

  // Sharings of public values and of slot-wise known components.
  BShare bconst(const BitVec& v) const;
  BShare bnot(BShare x) const;
  // Sharing whose only nonzero component is `slot`; `value` is used only by
  // the parties that hold that slot.
  BShare bslot(unsigned slot, const BitVec& value) const;
  AShare aconst(const std::vector<u64>& v) const;
  AShare aslot(unsigned slot, const std::vector<u64>& value) const;

  AShare add(const AShare& x, const AShare& y) const;
  AShare sub(const AShare& x, const AShare& y) const;
  AShare scale(const AShare& x, u64 c) const;
  AShare mul_public(const AShare& x, const std::vector<u64>& c) const;
  // Each element of x repeated width[k] times.
  static AShare repeat(const AShare& x, const std::vector<std::size_t>& width);
  static AShare slice(const AShare& x, std::size_t off, std::size_t len);
  static void append(AShare& x, const AShare& y);

  // Batched AND gates and modular products in one round.
  void mul_round(const std::vector<std::pair<const BShare*, const BShare*>>& band, std::vector<BShare>& bout,
                 const std::vector<std::pair<const AShare*, const AShare*>>& amul, std::vector<AShare>& aout);
  BShare band(const BShare& x, const BShare& y);
  AShare amul(const AShare& x, const AShare& y);

  // Opens values to all three parties in one round.
  void open_round(const std::vector<const BShare*>& bs, std::vector<BitVec>& bout,
                  const std::vector<const AShare*>& as, std::vector<std::vector<u64>>& aout);
  BitVec open(const BShare& x);
  std::vector<u64> open(const AShare& x);

  // Turns this party's slot of a 3-out-of-3 sharing into replicated form,
  // re-randomized with a zero sharing.
  void reshare_round(const std::vector<const BitVec*>& bs, std::vector<BShare>& bout,
                     const std::vector<const std::vector<u64>*>& as, std::vector<AShare>& aout);
  // Distributes this party's own component (slot i) without masking.
  void distribute_round(const std::vector<const BitVec*>& bs, std::vector<BShare>& bout,
                        const std::vector<const std::vector<u64>*>& as, std::vector<AShare>& aout);

  // Raw neighbour exchange used by protocol code: sends to prev, receives
  // from next.
  Bytes exchange_back(const Bytes& payload);

 private:
  BitVec zero_bits(std::size_t n);
  std::vector<u64> zero_words(std::size_t n);
  void begin_op();
  void end_op();

  unsigned i_;
  transport::Channel& prev_;
  transport::Channel& next_;
  Modulus p_;
  std::unique_ptr<Rng> zk_self_, zk_next_;
  Party3Stats stats_;
  std::uint64_t prg_mark_ = 0;
};

// Bit-sliced values: bits[k] holds bit k (LSB first) of every value.
using Sliced = std::vector<BShare>;

// Arithmetic-to-boolean conversion of values in [0, p): adds the three
// components with a carry-save layer and a ripple-carry adder, then reduces
// by conditional subtraction of p and 2p.
Sliced a2b(Party3& P, const AShare& x, unsigned nbits);
// Boolean bit to arithmetic 0/1.
AShare b2a(Party3& P, const BShare& bits);
// [x > y] for bit-sliced unsigned values of equal width.
BShare greater_than(Party3& P, const Sliced& x, const Sliced& y);

}  // namespace duet::tee
