#include "duet/gadgets/recipe.hpp"

#include "duet/common/error.hpp"

namespace duet::gadgets {

FieldConfig FieldConfig::of(u64 p, unsigned frac_bits) { return FieldConfig{Modulus(p), ceil_log2(p), frac_bits}; }

const char* to_string(GadgetKind k) {
  switch (k) {
    case GadgetKind::Relu: return "relu";
    case GadgetKind::Sigmoid: return "sigmoid";
    case GadgetKind::Tanh: return "tanh";
    case GadgetKind::MaxTwo: return "max2";
    case GadgetKind::Maxpool: return "maxpool";
    case GadgetKind::Argmax: return "argmax";
  }
  return "unknown";
}

MaskExpr MaskExpr::constant_of(u64 c) {
  MaskExpr e;
  e.constant = c;
  return e;
}

MaskExpr MaskExpr::mask(std::uint32_t index, u64 offset) {
  MaskExpr e;
  e.terms.push_back({index, 1});
  e.constant = offset;
  return e;
}

u64 MaskExpr::eval(std::span<const u64> masks, const Modulus& p) const {
  u64 v = constant;
  for (auto [i, c] : terms) {
    if (i >= masks.size()) throw DimensionError("mask index out of range");
    v = p.add(v, p.mul(c, masks[i]));
  }
  return v;
}

namespace {

// ReLU on a wire masked by expr: indicator of the non-negative half
// [0, (p-1)/2] shifted by the mask, carrying (1, mask).
IntervalRequest relu_interval(const FieldConfig& cfg, const MaskExpr& mask) {
  const Modulus& p = cfg.p;
  IntervalRequest req;
  req.lo = mask;
  req.hi = mask;
  req.hi.constant = p.add(mask.constant, (p.value() + 1) / 2);
  req.payload = {MaskExpr::constant_of(1), mask};
  return req;
}

void append_max_two(Recipe& r, const FieldConfig& cfg) {
  const Modulus& p = cfg.p;
  const std::uint32_t b = r.mask_count;
  r.mask_count += kMaxTwoMasks;
  MaskExpr r1 = MaskExpr::mask(b), r2 = MaskExpr::mask(b + 1);
  MaskExpr diff;
  diff.terms = {{b, 1}, {b + 1, p.neg(1)}};
  r.intervals.push_back(relu_interval(cfg, r1));
  r.intervals.push_back(relu_interval(cfg, r2));
  r.intervals.push_back(relu_interval(cfg, diff));
  std::vector<MaskExpr> pay = {MaskExpr::constant_of(1), MaskExpr::mask(b + 4), MaskExpr::mask(b + 5)};
  r.points.push_back({MaskExpr::mask(b + 2), pay});
  r.points.push_back({MaskExpr::mask(b + 3), pay});
}

}  // namespace

Recipe relu_recipe(const FieldConfig& cfg) {
  Recipe r;
  r.kind = GadgetKind::Relu;
  r.mask_count = 1;
  r.intervals.push_back(relu_interval(cfg, MaskExpr::mask(0)));
  return r;
}

Recipe spline_recipe(const FieldConfig& cfg, SplineFunction f) {
  const Modulus& p = cfg.p;
  Recipe r;
  r.kind = f == SplineFunction::Sigmoid ? GadgetKind::Sigmoid : GadgetKind::Tanh;
  r.mask_count = 1;
  for (const auto& seg : spline_int_table(f, p, cfg.frac_bits)) {
    IntervalRequest req;
    req.lo = MaskExpr::mask(0, seg.lo);
    req.hi = MaskExpr::mask(0, seg.hi);
    MaskExpr second = MaskExpr::constant_of(seg.intercept);
    second.terms.push_back({0, p.neg(seg.slope)});
    req.payload = {MaskExpr::constant_of(seg.slope), second};
    r.intervals.push_back(std::move(req));
  }
  return r;
}

Recipe max_two_recipe(const FieldConfig& cfg) {
  Recipe r;
  r.kind = GadgetKind::MaxTwo;
  r.arity = 2;
  append_max_two(r, cfg);
  return r;
}

Recipe maxpool_recipe(const FieldConfig& cfg, std::uint32_t k) {
  if (k == 0) throw ParameterError("maxpool needs at least one input");
  Recipe r;
  r.kind = GadgetKind::Maxpool;
  r.arity = k;
  for (std::uint32_t i = 0; i + 1 < k; ++i) append_max_two(r, cfg);
  return r;
}

Recipe argmax_recipe(const FieldConfig& cfg, std::uint32_t k) {
  Recipe r = maxpool_recipe(cfg, k);
  r.kind = GadgetKind::Argmax;
  const std::uint32_t base = r.mask_count;
  r.mask_count += k;
  for (std::uint32_t i = 0; i < k; ++i) {
    r.points.push_back({MaskExpr::mask(base + i), {MaskExpr::constant_of(i + 1)}});
  }
  return r;
}

Recipe recipe_for(const FieldConfig& cfg, GadgetKind kind, std::uint32_t arity) {
  switch (kind) {
    case GadgetKind::Relu: return relu_recipe(cfg);
    case GadgetKind::Sigmoid: return spline_recipe(cfg, SplineFunction::Sigmoid);
    case GadgetKind::Tanh: return spline_recipe(cfg, SplineFunction::Tanh);
    case GadgetKind::MaxTwo: return max_two_recipe(cfg);
    case GadgetKind::Maxpool: return maxpool_recipe(cfg, arity);
    case GadgetKind::Argmax: return argmax_recipe(cfg, arity);
  }
  throw ParameterError("unknown gadget kind");
}

std::pair<u64, u64> RngTape::mask() {
  u64 r = rng_.uniform(p_.value());
  return {r, rng_.uniform(p_.value())};
}

void Material::use_mask(std::uint32_t index) {
  if (index >= mask_shares.size()) throw DimensionError("mask index out of range");
  if (used_.size() != mask_shares.size()) used_.assign(mask_shares.size(), false);
  if (used_[index]) throw ReuseError("mask opened twice");
  used_[index] = true;
}

bool Material::mask_used(std::uint32_t index) const { return index < used_.size() && used_[index]; }

std::size_t Material::size_bytes() const {
  ByteWriter w;
  write_material(w, *this);
  return w.size();
}

std::array<Material, 2> build_material(const Recipe& recipe, const FieldConfig& cfg, RandomTape& tape) {
  const Modulus& p = cfg.p;
  std::array<Material, 2> out;
  for (int b = 0; b < 2; ++b) {
    out[b].kind = recipe.kind;
    out[b].party = static_cast<std::uint8_t>(b);
    out[b].arity = recipe.arity;
  }
  std::vector<u64> masks(recipe.mask_count);
  for (std::uint32_t i = 0; i < recipe.mask_count; ++i) {
    auto [r, s0] = tape.mask();
    masks[i] = r;
    out[0].mask_shares.push_back(s0);
    out[1].mask_shares.push_back(p.sub(r, s0));
  }
  for (const auto& req : recipe.intervals) {
    fss::Seed roots[4];
    for (auto& s : roots) s = tape.root();
    std::vector<u64> beta, share0;
    for (const auto& e : req.payload) beta.push_back(e.eval(masks, p));
    for (std::size_t i = 0; i < beta.size(); ++i) share0.push_back(tape.share0());
    u64 lo = req.lo.eval(masks, p), hi = req.hi.eval(masks, p);
    if (lo == hi) throw ParameterError("degenerate interval request");
    auto [k0, k1] = fss::dif_gen_explicit(lo, hi, lo > hi, beta, cfg.domain_bits, p, roots, share0);
    out[0].intervals.push_back(std::move(k0));
    out[1].intervals.push_back(std::move(k1));
  }
  for (const auto& req : recipe.points) {
    fss::Seed r0 = tape.root(), r1 = tape.root();
    std::vector<u64> beta;
    for (const auto& e : req.payload) beta.push_back(e.eval(masks, p));
    auto [k0, k1] = fss::tree_gen(fss::TreeKind::Point, cfg.domain_bits, p, req.alpha.eval(masks, p), beta, r0, r1);
    out[0].points.push_back(std::move(k0));
    out[1].points.push_back(std::move(k1));
  }
  return out;
}

void write_material(ByteWriter& w, const Material& m) {
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u8(m.party);
  w.u32(m.arity);
  w.u32(static_cast<std::uint32_t>(m.mask_shares.size()));
  w.u64s(m.mask_shares);
  w.u32(static_cast<std::uint32_t>(m.intervals.size()));
  for (const auto& k : m.intervals) fss::write_dif_key(w, k);
  w.u32(static_cast<std::uint32_t>(m.points.size()));
  for (const auto& k : m.points) fss::write_tree_key(w, k);
}

Material read_material(ByteReader& r) {
  Material m;
  auto kind = r.u8();
  if (kind < 1 || kind > 6) throw FormatError("unknown gadget kind");
  m.kind = static_cast<GadgetKind>(kind);
  m.party = r.u8();
  m.arity = r.u32();
  auto nm = r.u32();
  m.mask_shares = r.u64s(nm);
  auto ni = r.u32();
  if (ni > r.remaining()) throw FormatError("bad interval count");
  for (std::uint32_t i = 0; i < ni; ++i) m.intervals.push_back(fss::read_dif_key(r));
  auto np = r.u32();
  if (np > r.remaining()) throw FormatError("bad point count");
  for (std::uint32_t i = 0; i < np; ++i) m.points.push_back(fss::read_tree_key(r));
  return m;
}

}  // namespace duet::gadgets
