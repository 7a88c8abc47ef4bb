#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "duet/common/bytes.hpp"
#include "duet/common/random.hpp"
#include "duet/fss/keys.hpp"
#include "duet/gadgets/spline.hpp"
#include "duet/ring/modarith.hpp"

namespace duet::gadgets {

// Field and fixed-point settings shared by every gadget instance.
struct FieldConfig {
  Modulus p;
  unsigned domain_bits;
  unsigned frac_bits;

  static FieldConfig of(u64 p, unsigned frac_bits);
};

// Affine combination of mask values: constant + sum coeff * mask[index].
struct MaskExpr {
  std::vector<std::pair<std::uint32_t, u64>> terms;
  u64 constant = 0;

  static MaskExpr constant_of(u64 c);
  static MaskExpr mask(std::uint32_t index, u64 offset = 0);
  u64 eval(std::span<const u64> masks, const Modulus& p) const;
  bool operator==(const MaskExpr&) const = default;
};

// Interval key request over Z_p: payload on the cyclic range [lo, hi).
struct IntervalRequest {
  MaskExpr lo;
  MaskExpr hi;
  std::vector<MaskExpr> payload;
};

// Point key request over Z_p.
struct PointRequest {
  MaskExpr alpha;
  std::vector<MaskExpr> payload;
};

enum class GadgetKind : std::uint8_t { Relu = 1, Sigmoid = 2, Tanh = 3, MaxTwo = 4, Maxpool = 5, Argmax = 6 };
const char* to_string(GadgetKind k);

// Public description of the correlated randomness for one gadget instance.
// It names masks by index; the keys' secret points and payloads are affine
// functions of the masks.
struct Recipe {
  GadgetKind kind = GadgetKind::Relu;
  std::uint32_t arity = 1;
  std::uint32_t mask_count = 0;
  std::vector<IntervalRequest> intervals;
  std::vector<PointRequest> points;
};

Recipe relu_recipe(const FieldConfig& cfg);
Recipe spline_recipe(const FieldConfig& cfg, SplineFunction f);
Recipe max_two_recipe(const FieldConfig& cfg);
Recipe maxpool_recipe(const FieldConfig& cfg, std::uint32_t k);
Recipe argmax_recipe(const FieldConfig& cfg, std::uint32_t k);
Recipe recipe_for(const FieldConfig& cfg, GadgetKind kind, std::uint32_t arity);

// Masks per max_two instance and its key counts.
constexpr std::uint32_t kMaxTwoMasks = 6;
constexpr std::uint32_t kMaxTwoIntervals = 3;
constexpr std::uint32_t kMaxTwoPoints = 2;

// Source of the random choices made while building material. Draw order is
// fixed: per recipe, all masks, then for each interval the four root seeds
// and the party-0 offset shares, then for each point the two root seeds.
class RandomTape {
 public:
  virtual ~RandomTape() = default;
  // Returns (mask value, party-0 share).
  virtual std::pair<u64, u64> mask() = 0;
  virtual fss::Seed root() = 0;
  virtual u64 share0() = 0;
};

class RngTape final : public RandomTape {
 public:
  RngTape(Rng& rng, const Modulus& p) : rng_(rng), p_(p) {}
  std::pair<u64, u64> mask() override;
  fss::Seed root() override { return fss::random_seed(rng_); }
  u64 share0() override { return rng_.uniform(p_.value()); }

 private:
  Rng& rng_;
  Modulus p_;
};

// One party's share of one gadget instance: mask shares and FSS keys.
// Masks must each be opened at most once; see use_mask.
struct Material {
  GadgetKind kind = GadgetKind::Relu;
  std::uint8_t party = 0;
  std::uint32_t arity = 1;
  std::vector<u64> mask_shares;
  std::vector<fss::DifKey> intervals;
  std::vector<fss::DpfKey> points;

  // Throws ReuseError if the mask was already opened.
  void use_mask(std::uint32_t index);
  bool mask_used(std::uint32_t index) const;
  std::size_t size_bytes() const;

 private:
  std::vector<bool> used_;
};

std::array<Material, 2> build_material(const Recipe& recipe, const FieldConfig& cfg, RandomTape& tape);

void write_material(ByteWriter& w, const Material& m);
Material read_material(ByteReader& r);

}  // namespace duet::gadgets
