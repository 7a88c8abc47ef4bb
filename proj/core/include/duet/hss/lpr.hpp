#pragma once

#include <array>
#include <span>
#include <vector>

#include "duet/common/random.hpp"
#include "duet/ring/poly.hpp"

namespace duet::hss {

// Centered binomial parameter for error terms; |e_i| <= kNoiseEta.
constexpr unsigned kNoiseEta = 4;

struct SecretKey {
  RingPoly s;  // ternary, Eval form over R_q
};

struct PublicKey {
  RingPoly b;  // -a*s + e
  RingPoly a;
};

// (c0, c1) in Eval form over R_q with c0 + c1*s = Delta*m + noise, and an
// analytic bound on the infinity norm of the noise.
struct Ciphertext {
  RingPoly c0;
  RingPoly c1;
  double noise_bound = 0;
};

RingPoly sample_ternary(const RingContextPtr& ctx, Rng& rng);
RingPoly sample_noise(const RingContextPtr& ctx, Rng& rng);
RingPoly sample_uniform_q(const RingContextPtr& ctx, Rng& rng);

std::pair<SecretKey, PublicKey> keygen(const RingContextPtr& ctx, Rng& rng);
// One fresh-encryption noise bound: (2N + 1) * eta.
double fresh_noise_bound(const RingContext& ctx);

// m is an R_p polynomial; its centered lift is scaled by floor(q/p).
Ciphertext encrypt(const PublicKey& pk, const RingPoly& m, Rng& rng);
Ciphertext ct_add(const Ciphertext& x, const Ciphertext& y);
// Test-only: round(p/q * (c0 + c1 s)) mod p.
RingPoly decrypt(const SecretKey& sk, const Ciphertext& ct);

// Party-local homomorphic multiplication by a converted polynomial: with
// shares of y and y*s over R_q, returns this party's R_p share of y*m,
// computed as round(p/q * (c0*y_b + c1*(ys)_b)).
RingPoly hss_mult(const Ciphertext& ct, const RingPoly& y_share, const RingPoly& ys_share);

// Scales an R_q coefficient-form polynomial by p/q and rounds, coefficient
// by coefficient, using the RNS representation directly.
RingPoly scale_round_to_p(const RingPoly& t);

void write_ciphertext(ByteWriter& w, const Ciphertext& ct);
Ciphertext read_ciphertext(const RingContextPtr& ctx, ByteReader& r);
std::size_t ciphertext_bytes(const RingContext& ctx);

}  // namespace duet::hss
