#include "duet/ring/poly.hpp"

#include "duet/common/error.hpp"

namespace duet {

namespace {

constexpr std::uint32_t kPolyMagic = 0x4c505544;  // "DUPL"

std::vector<NttTables> make_q_tables(const ProtocolParams& pp) {
  std::vector<NttTables> t;
  for (u64 q : pp.q_primes) t.emplace_back(pp.N, Modulus(q));
  return t;
}

}  // namespace

RingContext::RingContext(const ProtocolParams& params)
    : params_(params), p_(params.p), p_ntt_(params.N, p_), q_ntt_(make_q_tables(params)) {
  params_.validate();
  for (u64 q : params.q_primes) q_.emplace_back(q);
  std::size_t L = q_.size();
  // floor(q/p) mod q_i = (q - (q mod p)) * p^{-1} mod q_i = -(q mod p) * p^{-1}.
  q_mod_p_ = 1;
  for (u64 q : params.q_primes) q_mod_p_ = p_.mul(q_mod_p_, q % p_.value());
  for (std::size_t i = 0; i < L; ++i) {
    const Modulus& qi = q_[i];
    u64 pinv = qi.inv(p_.value() % qi.value());
    delta_.push_back(qi.mul(qi.neg(q_mod_p_ % qi.value()), pinv));
    u64 qhat = 1;
    for (std::size_t j = 0; j < L; ++j) {
      if (j != i) qhat = qi.mul(qhat, q_[j].value() % qi.value());
    }
    qhat_inv_.push_back(qi.inv(qhat));
  }
}

RingPoly RingPoly::zero(RingContextPtr ctx, ModTag tag, Repr repr) {
  if (!ctx) throw ParameterError("null ring context");
  RingPoly r;
  std::size_t limbs = tag == ModTag::P ? 1 : ctx->q_limbs();
  r.data_.assign(limbs * ctx->degree(), 0);
  r.ctx_ = std::move(ctx);
  r.tag_ = tag;
  r.repr_ = repr;
  return r;
}

RingPoly RingPoly::from_coeffs(RingContextPtr ctx, std::span<const u64> coeffs) {
  if (coeffs.size() != ctx->degree()) throw DimensionError("coefficient count must equal N");
  for (u64 c : coeffs) {
    if (c >= ctx->p().value()) throw RangeError("coefficient not reduced mod p");
  }
  RingPoly r = zero(std::move(ctx), ModTag::P);
  std::copy(coeffs.begin(), coeffs.end(), r.data_.begin());
  return r;
}

RingPoly RingPoly::from_limbs(RingContextPtr ctx, std::span<const u64> residues, Repr repr) {
  if (residues.size() != ctx->degree() * ctx->q_limbs()) throw DimensionError("residue count mismatch");
  RingPoly r = zero(ctx, ModTag::Q, repr);
  std::size_t n = ctx->degree();
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      u64 v = residues[i * n + j];
      if (v >= ctx->q(i).value()) throw RangeError("residue not reduced");
      r.data_[i * n + j] = v;
    }
  }
  return r;
}

std::size_t RingPoly::degree() const { return ctx_ ? ctx_->degree() : 0; }
std::size_t RingPoly::limbs() const { return tag_ == ModTag::P ? 1 : (ctx_ ? ctx_->q_limbs() : 0); }

std::span<u64> RingPoly::limb(std::size_t i) {
  return std::span<u64>(data_).subspan(i * degree(), degree());
}

std::span<const u64> RingPoly::limb(std::size_t i) const {
  return std::span<const u64>(data_).subspan(i * degree(), degree());
}

const Modulus& RingPoly::limb_modulus(std::size_t i) const {
  return tag_ == ModTag::P ? ctx_->p() : ctx_->q(i);
}

const NttTables& RingPoly::limb_ntt(std::size_t i) const {
  return tag_ == ModTag::P ? ctx_->p_ntt() : ctx_->q_ntt(i);
}

RingPoly& RingPoly::to_eval() {
  if (repr_ == Repr::Eval) return *this;
  for (std::size_t i = 0; i < limbs(); ++i) limb_ntt(i).forward(limb(i));
  repr_ = Repr::Eval;
  return *this;
}

RingPoly& RingPoly::to_coeff() {
  if (repr_ == Repr::Coeff) return *this;
  for (std::size_t i = 0; i < limbs(); ++i) limb_ntt(i).inverse(limb(i));
  repr_ = Repr::Coeff;
  return *this;
}

RingPoly RingPoly::as(Repr r) const {
  RingPoly c = *this;
  return r == Repr::Eval ? std::move(c.to_eval()) : std::move(c.to_coeff());
}

void RingPoly::check_compatible(const RingPoly& o) const {
  if (!ctx_ || !o.ctx_) throw ParameterError("operation on empty polynomial");
  if (tag_ != o.tag_) throw ModulusError("mixing R_p and R_q polynomials");
  if (ctx_->degree() != o.ctx_->degree()) throw DimensionError("ring degree mismatch");
  if (ctx_ != o.ctx_ && !(ctx_->params() == o.ctx_->params())) throw ModulusError("ring parameter mismatch");
}

RingPoly& RingPoly::operator+=(const RingPoly& o) {
  check_compatible(o);
  const RingPoly* rhs = &o;
  RingPoly tmp;
  if (o.repr_ != repr_) {
    tmp = o.as(repr_);
    rhs = &tmp;
  }
  for (std::size_t i = 0; i < limbs(); ++i) vec_add_inplace(limb(i), rhs->limb(i), limb_modulus(i));
  return *this;
}

RingPoly& RingPoly::operator-=(const RingPoly& o) {
  check_compatible(o);
  const RingPoly* rhs = &o;
  RingPoly tmp;
  if (o.repr_ != repr_) {
    tmp = o.as(repr_);
    rhs = &tmp;
  }
  for (std::size_t i = 0; i < limbs(); ++i) vec_sub_inplace(limb(i), rhs->limb(i), limb_modulus(i));
  return *this;
}

RingPoly RingPoly::operator+(const RingPoly& o) const {
  RingPoly r = *this;
  r += o;
  return r;
}

RingPoly RingPoly::operator-(const RingPoly& o) const {
  RingPoly r = *this;
  r -= o;
  return r;
}

RingPoly RingPoly::operator-() const {
  RingPoly r = *this;
  for (std::size_t i = 0; i < limbs(); ++i) {
    const Modulus& m = limb_modulus(i);
    for (auto& x : r.limb(i)) x = m.neg(x);
  }
  return r;
}

RingPoly RingPoly::operator*(const RingPoly& o) const {
  check_compatible(o);
  RingPoly a = as(Repr::Eval);
  RingPoly b = o.as(Repr::Eval);
  for (std::size_t i = 0; i < a.limbs(); ++i) {
    const Modulus& m = a.limb_modulus(i);
    auto al = a.limb(i);
    auto bl = b.limb(i);
    for (std::size_t j = 0; j < al.size(); ++j) al[j] = m.mul(al[j], bl[j]);
  }
  return a;
}

void RingPoly::mul_add(const RingPoly& a, const RingPoly& b) {
  check_compatible(a);
  check_compatible(b);
  if (repr_ != Repr::Eval || a.repr_ != Repr::Eval || b.repr_ != Repr::Eval) {
    throw ParameterError("mul_add requires evaluation form");
  }
  for (std::size_t i = 0; i < limbs(); ++i) {
    const Modulus& m = limb_modulus(i);
    auto d = limb(i);
    auto al = a.limb(i);
    auto bl = b.limb(i);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = m.add(d[j], m.mul(al[j], bl[j]));
  }
}

bool RingPoly::operator==(const RingPoly& o) const {
  if (tag_ != o.tag_ || degree() != o.degree()) return false;
  if (repr_ == o.repr_) return data_ == o.data_;
  return data_ == o.as(repr_).data_;
}

RingPoly vec_to_poly(const RingContextPtr& ctx, std::span<const u64> v) {
  std::size_t n = ctx->degree();
  if (v.size() > n) throw DimensionError("vector longer than slot count");
  RingPoly r = RingPoly::zero(ctx, ModTag::P, Repr::Eval);
  auto d = r.limb(0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= ctx->p().value()) throw RangeError("slot value not reduced mod p");
    d[i] = v[i];
  }
  r.to_coeff();
  return r;
}

std::vector<u64> poly_to_vec(const RingPoly& a) {
  if (a.tag() != ModTag::P) throw ModulusError("slot view requires an R_p polynomial");
  RingPoly e = a.as(Repr::Eval);
  auto d = e.limb(0);
  return std::vector<u64>(d.begin(), d.end());
}

RingPoly lift_centered(const RingPoly& a) {
  if (a.tag() != ModTag::P) throw ModulusError("lift requires an R_p polynomial");
  RingPoly c = a.as(Repr::Coeff);
  const auto& ctx = a.context();
  RingPoly r = RingPoly::zero(ctx, ModTag::Q, Repr::Coeff);
  const Modulus& p = ctx->p();
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    const Modulus& q = ctx->q(i);
    auto dst = r.limb(i);
    auto src = c.limb(0);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = q.from_signed(p.to_signed(src[j]));
  }
  return r;
}

void write_poly(ByteWriter& w, const RingPoly& a) {
  RingPoly c = a.as(Repr::Coeff);
  w.u32(kPolyMagic);
  w.u32(static_cast<std::uint32_t>(a.tag()) | (static_cast<std::uint32_t>(a.limbs()) << 16));
  w.u64(a.degree());
  w.u64s(c.data());
}

Bytes serialize_poly(const RingPoly& a) {
  ByteWriter w(16 + a.data().size() * 8);
  write_poly(w, a);
  return std::move(w).take();
}

RingPoly read_poly(const RingContextPtr& ctx, ByteReader& r) {
  if (r.u32() != kPolyMagic) throw FormatError("bad polynomial magic");
  std::uint32_t tagword = r.u32();
  auto kind = static_cast<ModTag>(tagword & 0xffff);
  std::size_t limbs = tagword >> 16;
  std::size_t n = r.u64();
  if (n != ctx->degree()) throw DimensionError("serialized degree does not match context");
  if (kind == ModTag::P) {
    if (limbs != 1) throw FormatError("R_p polynomial must have one limb");
    return RingPoly::from_coeffs(ctx, r.u64s(n));
  }
  if (kind != ModTag::Q) throw FormatError("unknown polynomial kind");
  if (limbs != ctx->q_limbs()) throw ModulusError("RNS limb count mismatch");
  return RingPoly::from_limbs(ctx, r.u64s(n * limbs), Repr::Coeff);
}

RingPoly deserialize_poly(const RingContextPtr& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  RingPoly p = read_poly(ctx, r);
  r.expect_done();
  return p;
}

void write_field_vector(ByteWriter& w, std::span<const u64> v) {
  w.u32(kPolyMagic);
  w.u32(static_cast<std::uint32_t>(ModTag::P) | (1u << 16));
  w.u64(v.size());
  w.u64s(v);
}

Bytes serialize_field_vector(std::span<const u64> v) {
  ByteWriter w(16 + v.size() * 8);
  write_field_vector(w, v);
  return std::move(w).take();
}

std::vector<u64> read_field_vector(ByteReader& r, const Modulus& p) {
  if (r.u32() != kPolyMagic) throw FormatError("bad vector magic");
  if (r.u32() != (static_cast<std::uint32_t>(ModTag::P) | (1u << 16))) throw FormatError("bad vector tag");
  std::size_t n = r.u64();
  if (n > r.remaining() / 8) throw FormatError("truncated vector");
  auto v = r.u64s(n);
  for (u64 x : v) {
    if (x >= p.value()) throw RangeError("vector element not reduced mod p");
  }
  return v;
}

std::vector<u64> deserialize_field_vector(std::span<const std::uint8_t> bytes, const Modulus& p) {
  ByteReader r(bytes);
  auto v = read_field_vector(r, p);
  r.expect_done();
  return v;
}

}  // namespace duet
