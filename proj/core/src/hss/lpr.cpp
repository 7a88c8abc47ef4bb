#include "duet/hss/lpr.hpp"

#include <cmath>

#include "duet/common/error.hpp"

namespace duet::hss {

namespace {

RingPoly from_signed(const RingContextPtr& ctx, const std::vector<std::int64_t>& v) {
  RingPoly r = RingPoly::zero(ctx, ModTag::Q, Repr::Coeff);
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    auto l = r.limb(i);
    for (std::size_t j = 0; j < v.size(); ++j) l[j] = ctx->q(i).from_signed(v[j]);
  }
  return r;
}

}  // namespace

RingPoly sample_ternary(const RingContextPtr& ctx, Rng& rng) {
  std::vector<std::int64_t> v(ctx->degree());
  for (auto& x : v) x = static_cast<std::int64_t>(rng.uniform(3)) - 1;
  return from_signed(ctx, v).to_eval();
}

RingPoly sample_noise(const RingContextPtr& ctx, Rng& rng) {
  std::vector<std::int64_t> v(ctx->degree());
  for (auto& x : v) {
    u64 bits = rng.next_u64();
    int a = __builtin_popcountll(bits & ((1ULL << kNoiseEta) - 1));
    int b = __builtin_popcountll((bits >> 32) & ((1ULL << kNoiseEta) - 1));
    x = a - b;
  }
  return from_signed(ctx, v).to_eval();
}

RingPoly sample_uniform_q(const RingContextPtr& ctx, Rng& rng) {
  RingPoly r = RingPoly::zero(ctx, ModTag::Q, Repr::Eval);
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    for (auto& x : r.limb(i)) x = rng.uniform(ctx->q(i).value());
  }
  return r;
}

std::pair<SecretKey, PublicKey> keygen(const RingContextPtr& ctx, Rng& rng) {
  SecretKey sk{sample_ternary(ctx, rng)};
  RingPoly a = sample_uniform_q(ctx, rng);
  RingPoly e = sample_noise(ctx, rng);
  RingPoly b = e - a * sk.s;
  return {std::move(sk), PublicKey{std::move(b), std::move(a)}};
}

double fresh_noise_bound(const RingContext& ctx) { return (2.0 * ctx.degree() + 1) * kNoiseEta; }

Ciphertext encrypt(const PublicKey& pk, const RingPoly& m, Rng& rng) {
  if (m.tag() != ModTag::P) throw ModulusError("plaintext must be an R_p polynomial");
  const auto& ctx = pk.a.context();
  RingPoly u = sample_ternary(ctx, rng);
  RingPoly dm = lift_centered(m);
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    const Modulus& q = ctx->q(i);
    u64 d = ctx->delta_mod(i), ds = q.shoup(d);
    for (auto& x : dm.limb(i)) x = q.mul_shoup(x, d, ds);
  }
  dm.to_eval();
  Ciphertext ct;
  ct.c0 = pk.b * u;
  ct.c0 += sample_noise(ctx, rng);
  ct.c0 += dm;
  ct.c1 = pk.a * u;
  ct.c1 += sample_noise(ctx, rng);
  ct.noise_bound = fresh_noise_bound(*ctx);
  return ct;
}

Ciphertext ct_add(const Ciphertext& x, const Ciphertext& y) {
  Ciphertext r;
  r.c0 = x.c0 + y.c0;
  r.c1 = x.c1 + y.c1;
  // A plaintext carry past p contributes floor(q/p) * p = -(q mod p).
  r.noise_bound = x.noise_bound + y.noise_bound + static_cast<double>(x.c0.context()->q_mod_p());
  return r;
}

RingPoly scale_round_to_p(const RingPoly& tin) {
  if (tin.tag() != ModTag::Q) throw ModulusError("scale_round_to_p expects an R_q polynomial");
  RingPoly t = tin.as(Repr::Coeff);
  const auto& ctx = t.context();
  const Modulus& p = ctx->p();
  const std::size_t L = ctx->q_limbs(), n = ctx->degree();
  RingPoly out = RingPoly::zero(ctx, ModTag::P, Repr::Coeff);
  auto o = out.limb(0);
  std::vector<u64> y(L);
  for (std::size_t j = 0; j < n; ++j) {
    // t = sum_i y_i * (q/q_i) mod q, so t*p/q = sum_i y_i*p/q_i - k*p.
    u64 whole = 0;
    long double frac = 0;
    for (std::size_t i = 0; i < L; ++i) {
      const Modulus& qi = ctx->q(i);
      u64 yi = qi.mul(t.limb(i)[j], ctx->punctured_inv(i));
      u128 prod = static_cast<u128>(yi) * p.value();
      u64 fl = static_cast<u64>(prod / qi.value());
      u64 rem = static_cast<u64>(prod % qi.value());
      whole = p.add(whole, fl % p.value());
      frac += static_cast<long double>(rem) / static_cast<long double>(qi.value());
    }
    o[j] = p.add(whole, static_cast<u64>(std::llround(frac)) % p.value());
  }
  return out;
}

RingPoly hss_mult(const Ciphertext& ct, const RingPoly& y_share, const RingPoly& ys_share) {
  if (y_share.tag() != ModTag::Q || ys_share.tag() != ModTag::Q) throw ModulusError("converted shares must be over R_q");
  RingPoly t = RingPoly::zero(ct.c0.context(), ModTag::Q, Repr::Eval);
  RingPoly tmp_y, tmp_ys;
  const RingPoly* y = &y_share;
  const RingPoly* ys = &ys_share;
  if (y->repr() != Repr::Eval) y = &(tmp_y = y_share.as(Repr::Eval));
  if (ys->repr() != Repr::Eval) ys = &(tmp_ys = ys_share.as(Repr::Eval));
  t.mul_add(ct.c0, *y);
  t.mul_add(ct.c1, *ys);
  t.to_coeff();
  return scale_round_to_p(t);
}

RingPoly decrypt(const SecretKey& sk, const Ciphertext& ct) {
  RingPoly v = ct.c0 + ct.c1 * sk.s;
  return scale_round_to_p(v.to_coeff());
}

void write_ciphertext(ByteWriter& w, const Ciphertext& ct) {
  write_poly(w, ct.c0);
  write_poly(w, ct.c1);
}

Ciphertext read_ciphertext(const RingContextPtr& ctx, ByteReader& r) {
  Ciphertext ct;
  ct.c0 = read_poly(ctx, r);
  ct.c1 = read_poly(ctx, r);
  if (ct.c0.tag() != ModTag::Q || ct.c1.tag() != ModTag::Q) throw FormatError("ciphertext components must be over R_q");
  ct.c0.to_eval();
  ct.c1.to_eval();
  ct.noise_bound = fresh_noise_bound(*ctx);
  return ct;
}

std::size_t ciphertext_bytes(const RingContext& ctx) { return 2 * (16 + 8 * ctx.degree() * ctx.q_limbs()); }

}  // namespace duet::hss
