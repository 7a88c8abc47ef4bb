#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "duet/common/random.hpp"
#include "duet/fss/prg.hpp"
#include "duet/gadgets/recipe.hpp"
#include "duet/ring/modarith.hpp"

namespace duet::tee {

constexpr unsigned kEnclaves = 3;

// Pairwise seeds: seed i is shared by enclave i of both servers.
struct SeedSet {
  std::array<Block, kEnclaves> seeds{};
  std::uint16_t epoch = 0;

  static SeedSet derive(const Block& master, std::uint16_t epoch = 0);
  bool operator==(const SeedSet&) const = default;
};

// Counter-mode draws from one pairwise seed. Each (epoch, counter) pair is
// used at most once; running out of counters requires a new epoch.
class PrfStream {
 public:
  PrfStream(const Block& seed, std::uint16_t epoch, std::uint64_t start = 0);

  Block next_block();
  u64 next_mod(const Modulus& p);
  std::uint64_t counter() const { return counter_; }
  std::uint16_t epoch() const { return epoch_; }

 private:
  std::uint64_t take();

  Prf prf_;
  std::uint16_t epoch_;
  std::uint64_t counter_;
};

// One party's share of a pairwise random value r_i. Both servers derive the
// same r_i and split; the stream advances by two.
struct GenRandShare {
  u64 r = 0;      // trusted-test visibility only
  u64 share = 0;  // sh_b(r_i)
};
GenRandShare genrand(PrfStream& stream, const Modulus& p, unsigned b);

// Material tape over all three streams: masks and offset words are sums of
// the per-stream draws, root-seed blocks are XORs. Per stream the draw order
// matches what enclave i consumes in the distributed generator.
class CombinedTape final : public gadgets::RandomTape {
 public:
  CombinedTape(const SeedSet& seeds, const Modulus& p, std::uint64_t start = 0);
  std::pair<u64, u64> mask() override;
  fss::Seed root() override;
  u64 share0() override;
  std::uint64_t counter() const { return streams_[0].counter(); }

 private:
  std::array<PrfStream, kEnclaves> streams_;
  Modulus p_;
};

}  // namespace duet::tee
