#pragma once

#include <cstdint>
#include <vector>

#include "duet/ring/modarith.hpp"

namespace duet::gadgets {

// Piecewise-linear approximation: slope*x + intercept on [lo, hi).
struct SplinePiece {
  double lo;
  double hi;
  double slope;
  double intercept;
};

enum class SplineFunction : std::uint8_t { Sigmoid = 1, Tanh = 2 };

// 8 minimax segments with symmetric knots on [-8, 8] plus constant clamps
// outside. Max absolute error on [-8, 8] is below 0.016 for both tables.
std::vector<SplinePiece> spline_table(SplineFunction f);
double spline_real(SplineFunction f, double x);
double spline_exact(SplineFunction f, double x);

// Integer form at fractional precision frac_bits: segment k covers signed
// field values [lo, hi), output A*z + B at scale 2*frac_bits.
struct IntSegment {
  u64 lo;  // field representatives; the segment is the cyclic range [lo, hi)
  u64 hi;
  u64 slope;
  u64 intercept;
};
std::vector<IntSegment> spline_int_table(SplineFunction f, const Modulus& p, unsigned frac_bits);

// Plaintext fixed-point evaluation with exact floor truncation.
u64 spline_fixed(SplineFunction f, u64 z, const Modulus& p, unsigned frac_bits);

}  // namespace duet::gadgets
