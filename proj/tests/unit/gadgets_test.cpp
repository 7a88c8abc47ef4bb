#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "duet/common/error.hpp"
#include "duet/gadgets/eval.hpp"
#include "duet/gadgets/recipe.hpp"
#include "duet/ring/fixed_point.hpp"

using namespace duet;
using namespace duet::gadgets;

namespace {

// Splits signed plaintexts into two random additive shares.
std::array<std::vector<u64>, 2> share(const std::vector<std::int64_t>& xs, const Modulus& p, Rng& rng) {
  std::array<std::vector<u64>, 2> s;
  for (auto x : xs) {
    u64 v = p.from_signed(x);
    u64 a = rng.uniform(p.value());
    s[0].push_back(a);
    s[1].push_back(p.sub(v, a));
  }
  return s;
}

std::vector<std::int64_t> open(const std::array<std::vector<u64>, 2>& s, const Modulus& p) {
  std::vector<std::int64_t> r;
  for (std::size_t i = 0; i < s[0].size(); ++i) r.push_back(p.to_signed(p.add(s[0][i], s[1][i])));
  return r;
}

std::vector<std::int64_t> eval_gadget(const FieldConfig& cfg, const Recipe& rec, const std::vector<std::int64_t>& xs,
                                      Rng& rng) {
  RngTape tape(rng, cfg.p);
  auto mats = build_material(rec, cfg, tape);
  return open(run_local(cfg, std::move(mats), share(xs, cfg.p, rng)), cfg.p);
}

}  // namespace

TEST(Relu, ExhaustiveTenBitField) {
  auto cfg = FieldConfig::of(1021, 2);
  Rng rng(31);
  const std::int64_t M = 1021 / 4 - 1;
  auto rec = relu_recipe(cfg);
  for (std::int64_t x = -M; x <= M; ++x) {
    for (int t = 0; t < 3; ++t) {
      ASSERT_EQ(eval_gadget(cfg, rec, {x}, rng)[0], std::max<std::int64_t>(x, 0)) << x;
    }
  }
}

TEST(Relu, EveryMaskForSmallField) {
  auto cfg = FieldConfig::of(61, 1);
  auto rec = relu_recipe(cfg);
  // Enumerate all masks by scripting the tape.
  struct FixedMask final : RandomTape {
    u64 r;
    Rng rng{5};
    std::pair<u64, u64> mask() override { return {r, rng.uniform(61)}; }
    fss::Seed root() override { return fss::random_seed(rng); }
    u64 share0() override { return rng.uniform(61); }
  };
  Rng rng(32);
  for (u64 r = 0; r < 61; ++r) {
    FixedMask tape;
    tape.r = r;
    for (std::int64_t x = -14; x <= 14; ++x) {
      auto mats = build_material(rec, cfg, tape);
      auto out = open(run_local(cfg, std::move(mats), share({x}, cfg.p, rng)), cfg.p);
      ASSERT_EQ(out[0], std::max<std::int64_t>(x, 0)) << "r=" << r << " x=" << x;
    }
  }
}

TEST(Relu, OneRoundOneElementEachWay) {
  auto cfg = FieldConfig::of(1021, 2);
  Rng rng(33);
  RngTape tape(rng, cfg.p);
  auto mats = build_material(relu_recipe(cfg), cfg, tape);
  Evaluator e(cfg, std::move(mats[0]), {5});
  EXPECT_EQ(e.rounds(), 1u);
  EXPECT_EQ(e.messages().size(), 1u);
  // A second message for the same round would reopen the mask.
  EXPECT_THROW(e.messages(), ReuseError);
}

TEST(Spline, TablesMeetErrorBoundOnDenseGrid) {
  for (auto f : {SplineFunction::Sigmoid, SplineFunction::Tanh}) {
    double worst = 0;
    for (double x = -10; x <= 10; x += 1.0 / 1024) {
      worst = std::max(worst, std::fabs(spline_real(f, x) - spline_exact(f, x)));
    }
    EXPECT_LE(worst, 0.02);
  }
  EXPECT_EQ(spline_real(SplineFunction::Tanh, 0), 0.0);
  EXPECT_EQ(spline_real(SplineFunction::Sigmoid, 0), 0.5);
}

TEST(Spline, ProtocolMatchesFixedPointReference) {
  auto cfg = FieldConfig::of(536874497ULL, 8);
  FixedPoint fp(cfg.p, cfg.frac_bits);
  Rng rng(34);
  for (auto f : {SplineFunction::Sigmoid, SplineFunction::Tanh}) {
    auto rec = spline_recipe(cfg, f);
    EXPECT_EQ(rec.intervals.size(), 10u);
    double worst = 0;
    for (double x = -9; x <= 9; x += 1.0 / 16) {
      std::int64_t z = cfg.p.to_signed(fp.encode(x));
      std::int64_t got = eval_gadget(cfg, rec, {z}, rng)[0];
      std::int64_t want = cfg.p.to_signed(spline_fixed(f, cfg.p.from_signed(z), cfg.p, cfg.frac_bits));
      ASSERT_LE(std::llabs(got - want), 1) << x;
      worst = std::max(worst, std::fabs(std::ldexp(static_cast<double>(got), -8) - spline_exact(f, x)));
    }
    EXPECT_LE(worst, 0.02 + 3 * std::ldexp(1.0, -8));
  }
}

TEST(Spline, ZeroExamplesAtStandardScale) {
  auto cfg = FieldConfig::of(2251799813824513ULL, 12);
  FixedPoint fp(cfg.p, 12);
  Rng rng(35);
  auto t = eval_gadget(cfg, spline_recipe(cfg, SplineFunction::Tanh), {0}, rng)[0];
  auto s = eval_gadget(cfg, spline_recipe(cfg, SplineFunction::Sigmoid), {0}, rng)[0];
  EXPECT_NEAR(std::ldexp(static_cast<double>(t), -12), 0.0, 2.0 / 4096);
  EXPECT_NEAR(std::ldexp(static_cast<double>(s), -12), 0.5, 2.0 / 4096);
}

TEST(MaxTwo, TinyFieldExample) {
  // p = 7: field elements 5 and 3 read as -2 and 3.
  auto cfg = FieldConfig::of(7, 0);
  Rng rng(36);
  for (int t = 0; t < 50; ++t) {
    auto out = eval_gadget(cfg, max_two_recipe(cfg), {-2, 3}, rng);
    ASSERT_EQ(cfg.p.from_signed(out[0]), 3u);
  }
}

TEST(MaxTwo, ExhaustiveSixBitField) {
  auto cfg = FieldConfig::of(61, 0);
  Rng rng(37);
  auto rec = max_two_recipe(cfg);
  for (std::int64_t x = -14; x <= 14; ++x) {
    for (std::int64_t y = -14; y <= 14; ++y) {
      for (int t = 0; t < 2; ++t) {
        ASSERT_EQ(eval_gadget(cfg, rec, {x, y}, rng)[0], std::max(x, y)) << x << "," << y;
      }
    }
  }
}

TEST(Maxpool, RandomSetsAndCosts) {
  auto cfg = FieldConfig::of(1021, 0);
  Rng rng(38);
  for (std::uint32_t k = 1; k <= 8; ++k) {
    auto rec = maxpool_recipe(cfg, k);
    EXPECT_EQ(rec.mask_count, 6 * (k - 1));
    for (int t = 0; t < 40; ++t) {
      std::vector<std::int64_t> xs(k);
      for (auto& x : xs) x = static_cast<std::int64_t>(rng.uniform(509)) - 254;
      if (t == 0) std::fill(xs.begin(), xs.end(), 17);
      ASSERT_EQ(eval_gadget(cfg, rec, xs, rng)[0], *std::max_element(xs.begin(), xs.end()));
    }
    // Rounds and elements sent per direction.
    RngTape tape(rng, cfg.p);
    auto mats = build_material(rec, cfg, tape);
    Evaluator e(cfg, std::move(mats[0]), std::vector<u64>(k, 0));
    EXPECT_EQ(e.rounds(), 2 * static_cast<std::size_t>(ceil_log2(k)));
  }
}

TEST(Argmax, MultiHotOneBasedIndices) {
  auto cfg = FieldConfig::of(1021, 0);
  Rng rng(39);
  for (std::uint32_t k = 1; k <= 8; ++k) {
    auto rec = argmax_recipe(cfg, k);
    for (int t = 0; t < 30; ++t) {
      std::vector<std::int64_t> xs(k);
      for (auto& x : xs) x = static_cast<std::int64_t>(rng.uniform(9)) - 4;  // frequent ties
      auto out = eval_gadget(cfg, rec, xs, rng);
      auto mx = *std::max_element(xs.begin(), xs.end());
      for (std::uint32_t i = 0; i < k; ++i) ASSERT_EQ(out[i], xs[i] == mx ? i + 1 : 0);
    }
  }
  auto one = eval_gadget(cfg, argmax_recipe(cfg, 1), {-3}, rng);
  EXPECT_EQ(one, (std::vector<std::int64_t>{1}));
}

TEST(Material, SerializationRoundTrip) {
  auto cfg = FieldConfig::of(1021, 0);
  Rng rng(40);
  RngTape tape(rng, cfg.p);
  auto mats = build_material(argmax_recipe(cfg, 3), cfg, tape);
  ByteWriter w;
  write_material(w, mats[1]);
  ByteReader r(w.bytes());
  auto m = read_material(r);
  EXPECT_TRUE(r.done());
  EXPECT_EQ(m.mask_shares, mats[1].mask_shares);
  EXPECT_EQ(m.intervals, mats[1].intervals);
  EXPECT_EQ(m.points, mats[1].points);
}

TEST(Batch, LockstepOverChannelMatchesLocal) {
  auto cfg = FieldConfig::of(1021, 0);
  Rng rng(41);
  auto [c0, c1] = transport::make_inproc_pair("m0", "m1", transport::ChannelClass::WideArea);
  std::vector<std::int64_t> xs = {5, -7, 0, 100, -100};
  auto sh = share(xs, cfg.p, rng);
  std::array<std::vector<Evaluator>, 2> evs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    RngTape tape(rng, cfg.p);
    auto mats = build_material(relu_recipe(cfg), cfg, tape);
    for (int b = 0; b < 2; ++b) evs[b].emplace_back(cfg, std::move(mats[b]), std::vector<u64>{sh[b][i]});
  }
  std::thread t([&, c1 = c1] { run_batch(evs[1], *c1); });
  run_batch(evs[0], *c0);
  t.join();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(cfg.p.to_signed(cfg.p.add(evs[0][i].output()[0], evs[1][i].output()[0])), std::max<std::int64_t>(xs[i], 0));
  }
  EXPECT_EQ(c0->meter().total().payload_bytes_sent, xs.size() * 8);
  EXPECT_EQ(c0->meter().total().rounds, 1u);
}
