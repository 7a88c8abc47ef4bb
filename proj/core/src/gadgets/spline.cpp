#include "duet/gadgets/spline.hpp"

#include <cmath>

#include "duet/common/error.hpp"
#include "duet/ring/fixed_point.hpp"

namespace duet::gadgets {

namespace {

struct Half {
  double knots[5];
  double lines[4][2];
  double at_zero;  // f(0); odd/even symmetry is taken around this value
  double clamp_hi;
};

// Knots and lines fitted by minimax linear programming per segment, first
// segment anchored through f(0).
const Half kTanh = {{0, 0.6, 1.2, 2.0, 8},
                    {{0.920431, 0.0}, {0.494342, 0.255937}, {0.162966, 0.649645}, {0.005995, 0.964771}},
                    0.0,
                    1.0};
const Half kSigmoid = {{0, 1.0, 2.0, 3.5, 8},
                       {{0.235681, 0.5}, {0.149738, 0.587144}, {0.059927, 0.768087}, {0.006439, 0.954632}},
                       0.5,
                       1.0};

const Half& half_of(SplineFunction f) {
  switch (f) {
    case SplineFunction::Sigmoid: return kSigmoid;
    case SplineFunction::Tanh: return kTanh;
  }
  throw ParameterError("unknown spline function");
}

}  // namespace

std::vector<SplinePiece> spline_table(SplineFunction f) {
  const Half& h = half_of(f);
  // Point symmetry about (0, c): f(-x) = 2c - f(x), so the mirrored line has
  // the same slope and intercept 2c - b.
  double c = h.at_zero;
  std::vector<SplinePiece> t;
  t.push_back({-INFINITY, -8.0, 0.0, 2 * c - h.clamp_hi});
  for (int k = 3; k >= 0; --k) t.push_back({-h.knots[k + 1], -h.knots[k], h.lines[k][0], 2 * c - h.lines[k][1]});
  for (int k = 0; k < 4; ++k) t.push_back({h.knots[k], h.knots[k + 1], h.lines[k][0], h.lines[k][1]});
  t.push_back({8.0, INFINITY, 0.0, h.clamp_hi});
  return t;
}

double spline_real(SplineFunction f, double x) {
  for (const auto& s : spline_table(f)) {
    if (x >= s.lo && x < s.hi) return s.slope * x + s.intercept;
  }
  return 0;
}

double spline_exact(SplineFunction f, double x) {
  return f == SplineFunction::Tanh ? std::tanh(x) : 1.0 / (1.0 + std::exp(-x));
}

std::vector<IntSegment> spline_int_table(SplineFunction f, const Modulus& p, unsigned frac_bits) {
  const double scale = std::ldexp(1.0, static_cast<int>(frac_bits));
  const std::int64_t eight = static_cast<std::int64_t>(8 * scale);
  if (static_cast<u64>(eight) * 4 >= p.value()) throw ParameterError("field too small for the spline domain");
  const u64 half_up = (p.value() + 1) / 2;  // -(p-1)/2 as a field element
  std::vector<IntSegment> out;
  for (const auto& s : spline_table(f)) {
    IntSegment seg;
    seg.lo = std::isinf(s.lo) ? half_up : p.from_signed(std::llround(s.lo * scale));
    seg.hi = std::isinf(s.hi) ? half_up : p.from_signed(std::llround(s.hi * scale));
    seg.slope = p.from_signed(std::llround(s.slope * scale));
    seg.intercept = p.from_signed(std::llround(s.intercept * scale * scale));
    out.push_back(seg);
  }
  return out;
}

u64 spline_fixed(SplineFunction f, u64 z, const Modulus& p, unsigned frac_bits) {
  for (const auto& seg : spline_int_table(f, p, frac_bits)) {
    bool in = seg.lo < seg.hi ? (z >= seg.lo && z < seg.hi) : (z >= seg.lo || z < seg.hi);
    if (in) return truncate_public(p.add(p.mul(seg.slope, z), seg.intercept), frac_bits, p);
  }
  throw RangeError("spline segments do not cover the field");
}

}  // namespace duet::gadgets
