#pragma once

#include <memory>
#include <span>
#include <vector>

#include "duet/common/bytes.hpp"
#include "duet/ring/ntt.hpp"
#include "duet/ring/params.hpp"

namespace duet {

// Precomputed tables for R_p = Z_p[X]/(X^N+1) and R_q in RNS form.
class RingContext {
 public:
  explicit RingContext(const ProtocolParams& params);
  static std::shared_ptr<const RingContext> create(const ProtocolParams& params) {
    return std::make_shared<const RingContext>(params);
  }

  const ProtocolParams& params() const { return params_; }
  std::size_t degree() const { return params_.N; }
  const Modulus& p() const { return p_; }
  const NttTables& p_ntt() const { return p_ntt_; }
  std::size_t q_limbs() const { return q_.size(); }
  const Modulus& q(std::size_t i) const { return q_[i]; }
  const NttTables& q_ntt(std::size_t i) const { return q_ntt_[i]; }

  // floor(q/p) mod q_i.
  u64 delta_mod(std::size_t i) const { return delta_[i]; }
  // (q/q_i)^{-1} mod q_i.
  u64 punctured_inv(std::size_t i) const { return qhat_inv_[i]; }
  // q mod p.
  u64 q_mod_p() const { return q_mod_p_; }

 private:
  ProtocolParams params_;
  Modulus p_;
  NttTables p_ntt_;
  std::vector<Modulus> q_;
  std::vector<NttTables> q_ntt_;
  std::vector<u64> delta_;
  std::vector<u64> qhat_inv_;
  u64 q_mod_p_ = 0;
};

using RingContextPtr = std::shared_ptr<const RingContext>;

enum class ModTag : std::uint8_t { P = 1, Q = 2 };
enum class Repr : std::uint8_t { Coeff = 0, Eval = 1 };

// Element of R_p (one limb) or R_q (one limb per q prime), tagged with its
// representation. Eval form for R_p is the slot (CRT) view.
class RingPoly {
 public:
  RingPoly() = default;
  static RingPoly zero(RingContextPtr ctx, ModTag tag, Repr repr = Repr::Coeff);
  // R_p polynomial from coefficients (length N, each < p).
  static RingPoly from_coeffs(RingContextPtr ctx, std::span<const u64> coeffs);
  // R_q polynomial from limb-major residues (length limbs*N).
  static RingPoly from_limbs(RingContextPtr ctx, std::span<const u64> residues, Repr repr);

  const RingContextPtr& context() const { return ctx_; }
  ModTag tag() const { return tag_; }
  Repr repr() const { return repr_; }
  std::size_t degree() const;
  std::size_t limbs() const;
  std::span<u64> limb(std::size_t i);
  std::span<const u64> limb(std::size_t i) const;
  std::span<const u64> data() const { return data_; }
  std::span<u64> data() { return data_; }

  RingPoly& to_eval();
  RingPoly& to_coeff();
  RingPoly as(Repr r) const;

  RingPoly& operator+=(const RingPoly& o);
  RingPoly& operator-=(const RingPoly& o);
  RingPoly operator+(const RingPoly& o) const;
  RingPoly operator-(const RingPoly& o) const;
  RingPoly operator-() const;
  // Negacyclic product; result in Eval form.
  RingPoly operator*(const RingPoly& o) const;
  // this += a * b with all three in Eval form.
  void mul_add(const RingPoly& a, const RingPoly& b);

  bool operator==(const RingPoly& o) const;

 private:
  const Modulus& limb_modulus(std::size_t i) const;
  const NttTables& limb_ntt(std::size_t i) const;
  void check_compatible(const RingPoly& o) const;

  RingContextPtr ctx_;
  ModTag tag_ = ModTag::P;
  Repr repr_ = Repr::Coeff;
  std::vector<u64> data_;
};

// Slot packing: pads v (length <= N) with zeros and returns the R_p
// polynomial whose slots are v, in coefficient form.
RingPoly vec_to_poly(const RingContextPtr& ctx, std::span<const u64> v);
// Slot values of an R_p polynomial.
std::vector<u64> poly_to_vec(const RingPoly& a);
// R_p coefficients lifted to (-p/2, p/2] and reduced into R_q.
RingPoly lift_centered(const RingPoly& a);

// Wire format: 16-byte header (magic, kind|limbs<<16, length) then
// little-endian words, limb-major, coefficient order.
Bytes serialize_poly(const RingPoly& a);
RingPoly deserialize_poly(const RingContextPtr& ctx, std::span<const std::uint8_t> bytes);
void write_poly(ByteWriter& w, const RingPoly& a);
RingPoly read_poly(const RingContextPtr& ctx, ByteReader& r);
Bytes serialize_field_vector(std::span<const u64> v);
std::vector<u64> deserialize_field_vector(std::span<const std::uint8_t> bytes, const Modulus& p);
void write_field_vector(ByteWriter& w, std::span<const u64> v);
std::vector<u64> read_field_vector(ByteReader& r, const Modulus& p);

}  // namespace duet
