#pragma once

#include <span>
#include <vector>

#include "duet/hss/dealer.hpp"
#include "duet/hss/pack.hpp"
#include "duet/transport/channel.hpp"

namespace duet::hss {

// One party's share of the vector parts of a triple; the B share is held
// with the model and reused across inferences.
struct TripleShare {
  std::vector<u64> a;
  std::vector<u64> c;
};

struct TripleStats {
  std::size_t ciphertexts_sent = 0;
  std::size_t mults = 0;
  std::size_t bytes_sent = 0;
  double max_noise_bound = 0;
};

// Converted B polynomials, indexed [A polynomial][B polynomial].
using ConvertedPlan = std::vector<std::vector<ConvertedPoly>>;

// Per-inference triple generation. Samples this party's a_j, sends one
// encryption per A polynomial, adds the peer's, and multiplies by every
// converted B polynomial locally.
std::vector<TripleShare> generate_triples(int party, const PackPlan& plan, const PublicKey& pk,
                                          const ConvertedPlan& converted, transport::Channel& peer, Rng& rng,
                                          TripleStats* stats = nullptr);

// Slot vectors this party submits for conversion, indexed like ConvertedPlan.
std::vector<std::vector<std::vector<u64>>> conversion_inputs(const PackPlan& plan,
                                                            std::span<const std::vector<u64>> b_share);

// Both parties in one process over a queue channel, with a fresh dealer
// setup and conversion. Returns reconstructed (a, c) per job.
struct LocalTripleRun {
  std::vector<TripleShare> reconstructed;
  TripleStats stats0;
  std::size_t ciphertexts = 0;
};
LocalTripleRun generate_triples_local(const RingContextPtr& ctx, const PackPlan& plan,
                                      std::span<const std::vector<u64>> B, Rng& rng);

// c == a * B over Z_p, with B row-major n x m.
bool check_triple(std::span<const u64> a, std::span<const u64> B, std::span<const u64> c, const Modulus& p);
std::vector<u64> vec_mat(std::span<const u64> x, std::span<const u64> B, std::size_t n, std::size_t m,
                         const Modulus& p);

}  // namespace duet::hss
