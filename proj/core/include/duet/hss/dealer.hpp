#pragma once

#include <array>
#include <span>
#include <vector>

#include "duet/hss/lpr.hpp"

namespace duet::hss {

// Stand-in for the one-time two-party setup computation: it sees the
// servers' secret-key shares and share inputs, and returns only shares.
struct DealerKeys {
  PublicKey pk;
  std::array<RingPoly, 2> key_share;  // additive R_q shares of s
};

DealerKeys dealer_setup(const RingContextPtr& ctx, Rng& rng);

// One party's share of a converted B polynomial: y = lift(vec_to_poly(B))
// and y*s, both over R_q in Eval form.
struct ConvertedPoly {
  RingPoly y;
  RingPoly ys;
};

// Inputs: both parties' key shares and slot-vector shares of one B column.
std::array<ConvertedPoly, 2> dealer_convert_column(const RingContextPtr& ctx,
                                                   const std::array<RingPoly, 2>& key_share,
                                                   std::span<const u64> column_share0,
                                                   std::span<const u64> column_share1, Rng& rng);

void write_converted(ByteWriter& w, const ConvertedPoly& c);
ConvertedPoly read_converted(const RingContextPtr& ctx, ByteReader& r);

}  // namespace duet::hss
