#include "duet/tee/randomness.hpp"

#include "duet/common/error.hpp"

namespace duet::tee {

SeedSet SeedSet::derive(const Block& master, std::uint16_t epoch) {
  Aes128 aes(master);
  SeedSet s;
  s.epoch = epoch;
  for (unsigned i = 0; i < kEnclaves; ++i) s.seeds[i] = aes.encrypt(block_from_u64(i, 0x5345454453ULL));
  return s;
}

PrfStream::PrfStream(const Block& seed, std::uint16_t epoch, std::uint64_t start)
    : prf_(seed), epoch_(epoch), counter_(start) {}

std::uint64_t PrfStream::take() {
  if (counter_ == std::numeric_limits<std::uint64_t>::max()) throw Error("PRF counter exhausted; epoch rotation required");
  return counter_++;
}

Block PrfStream::next_block() { return prf_.eval(epoch_, take()); }

u64 PrfStream::next_mod(const Modulus& p) { return prf_.eval_mod(epoch_, take(), p.value()); }

GenRandShare genrand(PrfStream& stream, const Modulus& p, unsigned b) {
  if (b > 1) throw ParameterError("server index must be 0 or 1");
  GenRandShare g;
  g.r = stream.next_mod(p);
  u64 s0 = stream.next_mod(p);
  g.share = b == 0 ? s0 : p.sub(g.r, s0);
  return g;
}

CombinedTape::CombinedTape(const SeedSet& seeds, const Modulus& p, std::uint64_t start)
    : streams_{PrfStream(seeds.seeds[0], seeds.epoch, start), PrfStream(seeds.seeds[1], seeds.epoch, start),
               PrfStream(seeds.seeds[2], seeds.epoch, start)},
      p_(p) {}

std::pair<u64, u64> CombinedTape::mask() {
  u64 r = 0, s0 = 0;
  for (auto& s : streams_) {
    auto g = genrand(s, p_, 0);
    r = p_.add(r, g.r);
    s0 = p_.add(s0, g.share);
  }
  return {r, s0};
}

fss::Seed CombinedTape::root() {
  fss::Seed seed{};
  for (auto& s : streams_) {
    for (auto& blk : seed) blk = block_xor(blk, s.next_block());
  }
  return seed;
}

u64 CombinedTape::share0() {
  u64 v = 0;
  for (auto& s : streams_) v = p_.add(v, s.next_mod(p_));
  return v;
}

}  // namespace duet::tee
