#include "duet/hss/dealer.hpp"

#include "duet/common/error.hpp"

namespace duet::hss {

DealerKeys dealer_setup(const RingContextPtr& ctx, Rng& rng) {
  auto [sk, pk] = keygen(ctx, rng);
  RingPoly e0 = sample_uniform_q(ctx, rng);
  RingPoly e1 = sk.s - e0;
  return DealerKeys{std::move(pk), {std::move(e0), std::move(e1)}};
}

std::array<ConvertedPoly, 2> dealer_convert_column(const RingContextPtr& ctx,
                                                   const std::array<RingPoly, 2>& key_share,
                                                   std::span<const u64> column_share0,
                                                   std::span<const u64> column_share1, Rng& rng) {
  if (column_share0.size() != column_share1.size() || column_share0.size() > ctx->degree()) {
    throw DimensionError("column shares must have equal length at most N");
  }
  const Modulus& p = ctx->p();
  std::vector<u64> col(column_share0.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (column_share0[i] >= p.value() || column_share1[i] >= p.value()) throw RangeError("column share not reduced");
    col[i] = p.add(column_share0[i], column_share1[i]);
  }
  RingPoly s = key_share[0] + key_share[1];
  RingPoly y = lift_centered(vec_to_poly(ctx, col)).to_eval();
  RingPoly ys = y * s;
  RingPoly y0 = sample_uniform_q(ctx, rng);
  RingPoly ys0 = sample_uniform_q(ctx, rng);
  RingPoly y1 = y - y0;
  RingPoly ys1 = ys - ys0;
  return {ConvertedPoly{std::move(y0), std::move(ys0)}, ConvertedPoly{std::move(y1), std::move(ys1)}};
}

void write_converted(ByteWriter& w, const ConvertedPoly& c) {
  write_poly(w, c.y);
  write_poly(w, c.ys);
}

ConvertedPoly read_converted(const RingContextPtr& ctx, ByteReader& r) {
  ConvertedPoly c;
  c.y = read_poly(ctx, r);
  c.ys = read_poly(ctx, r);
  if (c.y.tag() != ModTag::Q || c.ys.tag() != ModTag::Q) throw FormatError("converted shares must be over R_q");
  c.y.to_eval();
  c.ys.to_eval();
  return c;
}

}  // namespace duet::hss
