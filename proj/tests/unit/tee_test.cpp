#include <gtest/gtest.h>

#include <functional>
#include <set>
#include <thread>

#include "duet/common/error.hpp"
#include "duet/fss/keys.hpp"
#include "duet/fss/prg.hpp"
#include "duet/gadgets/eval.hpp"
#include "duet/tee/enclave.hpp"
#include "duet/tee/randomness.hpp"
#include "duet/tee/replicated.hpp"

using namespace duet;
using namespace duet::tee;
using gadgets::FieldConfig;
using gadgets::GadgetKind;
using gadgets::Material;

namespace {

// Runs f on three connected parties, one thread each.
void run3(const Modulus& p, const std::function<void(Party3&)>& f) {
  std::array<transport::ChannelPtr, 3> prev, next;
  for (unsigned e = 0; e < 3; ++e) {
    auto [x, y] = transport::make_inproc_pair("n" + std::to_string(e), "p" + std::to_string((e + 1) % 3),
                                              transport::ChannelClass::EnclaveEnclave);
    next[e] = x;
    prev[(e + 1) % 3] = y;
  }
  std::array<std::exception_ptr, 3> errs;
  std::vector<std::thread> th;
  for (unsigned e = 0; e < 3; ++e) {
    th.emplace_back([&, e] {
      try {
        Party3 P(e, *prev[e], *next[e], p);
        P.setup(block_from_u64(1000 + e, 7));
        f(P);
      } catch (...) {
        errs[e] = std::current_exception();
      }
    });
  }
  for (auto& t : th) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// Random replicated sharing of x, built identically by every party.
BShare share_bits(const Party3& P, const BitVec& x, std::uint64_t seed) {
  Rng rng(seed);
  BitVec c[3] = {BitVec(x.size()), BitVec(x.size()), x};
  for (int k = 0; k < 2; ++k) {
    for (std::size_t j = 0; j < x.size(); ++j) c[k].set(j, rng.next_bit());
    c[2] ^= c[k];
  }
  return {c[P.index()], c[(P.index() + 1) % 3]};
}

AShare share_words(const Party3& P, const std::vector<u64>& x, std::uint64_t seed) {
  Rng rng(seed);
  const Modulus& p = P.modulus();
  std::vector<u64> c[3] = {rng.uniform_vec(x.size(), p.value()), rng.uniform_vec(x.size(), p.value()), x};
  c[2] = vec_sub(vec_sub(c[2], c[0], p), c[1], p);
  return {c[P.index()], c[(P.index() + 1) % 3]};
}

std::vector<u64> bits_value(const std::vector<BitVec>& bits) {
  std::vector<u64> v(bits[0].size(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k)
    for (std::size_t t = 0; t < v.size(); ++t) v[t] |= static_cast<u64>(bits[k].get(t)) << k;
  return v;
}

SeedSet test_seeds(std::uint64_t s) { return SeedSet::derive(block_from_u64(s, 0xabc)); }

std::vector<gadgets::Recipe> all_kinds(const FieldConfig& cfg) {
  return {gadgets::relu_recipe(cfg),
          gadgets::spline_recipe(cfg, gadgets::SplineFunction::Sigmoid),
          gadgets::spline_recipe(cfg, gadgets::SplineFunction::Tanh),
          gadgets::max_two_recipe(cfg),
          gadgets::maxpool_recipe(cfg, 4),
          gadgets::argmax_recipe(cfg, 3)};
}

Bytes bytes_of(const Material& m) {
  ByteWriter w;
  gadgets::write_material(w, m);
  return std::move(w).take();
}

}  // namespace

TEST(BitVec, SliceAppendBroadcastMatchNaive) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng.uniform(300), m = 1 + rng.uniform(200);
    BitVec x(n), y(m);
    for (std::size_t i = 0; i < n; ++i) x.set(i, rng.next_bit());
    for (std::size_t i = 0; i < m; ++i) y.set(i, rng.next_bit());
    BitVec z = x;
    z.append(y);
    ASSERT_EQ(z.size(), n + m);
    for (std::size_t i = 0; i < n + m; ++i) ASSERT_EQ(z.get(i), i < n ? x.get(i) : y.get(i - n));
    std::size_t off = rng.uniform(n + m), len = rng.uniform(n + m - off + 1);
    BitVec s = z.slice(off, len);
    for (std::size_t i = 0; i < len; ++i) ASSERT_EQ(s.get(i), z.get(off + i));
    std::size_t w = 1 + rng.uniform(130);
    BitVec bc = x.broadcast(w);
    for (std::size_t i = 0; i < n * w; ++i) ASSERT_EQ(bc.get(i), x.get(i / w));
    EXPECT_EQ(BitVec::from_bytes(z.to_bytes(), z.size()), z);
  }
}

TEST(GenRand, SharesSumAndServersAgree) {
  const Modulus p(2251799813824513ULL);
  auto seeds = test_seeds(2);
  PrfStream s0(seeds.seeds[1], seeds.epoch), s1(seeds.seeds[1], seeds.epoch);
  std::set<u64> seen;
  for (int k = 0; k < 1000; ++k) {
    auto a = genrand(s0, p, 0), b = genrand(s1, p, 1);
    ASSERT_EQ(a.r, b.r);
    ASSERT_EQ(p.add(a.share, b.share), a.r);
    seen.insert(a.r);
  }
  EXPECT_EQ(s0.counter(), 2000u);
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(GenRand, CounterExhaustionRequiresNewEpoch) {
  const Modulus p(61);
  PrfStream s(block_from_u64(3), 0, ~0ULL - 1);
  s.next_mod(p);
  EXPECT_THROW(s.next_mod(p), Error);
  PrfStream e0(block_from_u64(3), 0), e1(block_from_u64(3), 1);
  EXPECT_NE(e0.next_block(), e1.next_block());
}

TEST(Replicated, AndTruthTableUnderRandomSharings) {
  const Modulus p(61);
  // All four input combinations, 64 random sharings each.
  BitVec x(256), y(256);
  for (std::size_t i = 0; i < 256; ++i) {
    x.set(i, i & 1);
    y.set(i, (i >> 1) & 1);
  }
  std::array<BitVec, 3> got, self, zero;
  run3(p, [&](Party3& P) {
    auto xs = share_bits(P, x, 11), ys = share_bits(P, y, 12);
    got[P.index()] = P.open(P.band(xs, ys));
    self[P.index()] = P.open(P.band(xs, xs));
    zero[P.index()] = P.open(P.band(xs, P.bconst(BitVec(256))));
    EXPECT_EQ(P.stats().and_gates, 3 * 256u);
    EXPECT_EQ(P.stats().prg_calls_in_protocol, 0u);
  });
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(got[e], x & y);
    EXPECT_EQ(self[e], x);
    EXPECT_EQ(zero[e], BitVec(256));
  }
}

TEST(Replicated, AndSendsOneBitVectorPerParty) {
  std::array<transport::ChannelPtr, 3> prev, next;
  for (unsigned e = 0; e < 3; ++e) {
    auto [a, b] = transport::make_inproc_pair("n", "p", transport::ChannelClass::EnclaveEnclave);
    next[e] = a;
    prev[(e + 1) % 3] = b;
  }
  const Modulus p(61);
  std::vector<std::thread> th;
  for (unsigned e = 0; e < 3; ++e) {
    th.emplace_back([&, e] {
      Party3 P(e, *prev[e], *next[e], p);
      P.setup(block_from_u64(e));
      auto x = P.bconst(BitVec::ones(800));
      P.band(x, x);
    });
  }
  for (auto& t : th) t.join();
  for (unsigned e = 0; e < 3; ++e) {
    // 16 key bytes at setup plus 100 bytes for 800 gates.
    EXPECT_EQ(prev[e]->meter().total().payload_bytes_sent, 16u + 100u);
    EXPECT_EQ(prev[e]->meter().total().messages_sent, 2u);
  }
}

TEST(Replicated, ArithmeticProductAndOpen) {
  const Modulus p(2251799813824513ULL);
  Rng rng(5);
  auto x = rng.uniform_vec(40, p.value()), y = rng.uniform_vec(40, p.value());
  std::array<std::vector<u64>, 3> got;
  run3(p, [&](Party3& P) { got[P.index()] = P.open(P.amul(share_words(P, x, 1), share_words(P, y, 2))); });
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(got[0][k], p.mul(x[k], y[k]));
  EXPECT_EQ(got[0], got[1]);
  EXPECT_EQ(got[1], got[2]);
}

TEST(A2B, ExhaustiveSixBit) {
  const Modulus p(61);
  std::vector<u64> vals;
  for (u64 v = 0; v < 61; ++v)
    for (int rep = 0; rep < 4; ++rep) vals.push_back(v);
  std::array<std::vector<u64>, 3> got;
  run3(p, [&](Party3& P) {
    auto bits = a2b(P, share_words(P, vals, 21), 6);
    std::vector<BitVec> open;
    for (auto& b : bits) open.push_back(P.open(b));
    got[P.index()] = bits_value(open);
  });
  EXPECT_EQ(got[0], vals);
  EXPECT_EQ(got[2], vals);
}

TEST(A2B, RandomSixteenBitAndZero) {
  const Modulus p(65521);
  Rng rng(6);
  auto vals = rng.uniform_vec(500, p.value());
  vals[0] = 0;
  vals[1] = p.value() - 1;
  std::vector<u64> got;
  run3(p, [&](Party3& P) {
    auto bits = a2b(P, share_words(P, vals, 22), 16);
    std::vector<BitVec> open;
    for (auto& b : bits) open.push_back(P.open(b));
    if (P.index() == 0) got = bits_value(open);
  });
  EXPECT_EQ(got, vals);
}

TEST(Circuits, BitInjectionAndComparison) {
  const Modulus p(1021);
  Rng rng(7);
  auto xs = rng.uniform_vec(300, p.value()), ys = rng.uniform_vec(300, p.value());
  for (int k = 0; k < 20; ++k) ys[k] = xs[k];
  BitVec bits(300);
  for (std::size_t i = 0; i < 300; ++i) bits.set(i, rng.next_bit());
  std::vector<u64> inj;
  BitVec gt;
  run3(p, [&](Party3& P) {
    auto a = P.open(b2a(P, share_bits(P, bits, 31)));
    auto xb = a2b(P, share_words(P, xs, 32), 10), yb = a2b(P, share_words(P, ys, 33), 10);
    auto g = P.open(greater_than(P, xb, yb));
    if (P.index() == 1) {
      inj = a;
      gt = g;
    }
  });
  for (std::size_t i = 0; i < 300; ++i) {
    EXPECT_EQ(inj[i], bits.get(i) ? 1u : 0u);
    EXPECT_EQ(gt.get(i), xs[i] > ys[i]) << xs[i] << " " << ys[i];
  }
}

TEST(BlockPrg, XorOfBlockExpansionsEqualsCentralExpansion) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    fss::Seed s = fss::random_seed(rng);
    std::array<std::uint8_t, fss::kNodeBitBytes> acc{};
    for (unsigned j = 0; j < fss::kSeedBlocks; ++j) {
      auto part = fss::node_bits_block(j, s[j]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= part[i];
    }
    auto central = fss::expand_node_bits(s);
    auto dist = fss::parse_node_bits(acc);
    EXPECT_EQ(dist.s[0], central.s[0]);
    EXPECT_EQ(dist.s[1], central.s[1]);
    EXPECT_EQ(dist.t[0], central.t[0]);
    EXPECT_EQ(dist.t[1], central.t[1]);
  }
}

TEST(SingleTee, ServersProduceTwoHalvesOfOneKeyPair) {
  auto cfg = FieldConfig::of(1021, 2);
  auto seeds = test_seeds(9);
  SingleTee t0(0, seeds, cfg), t1(1, seeds, cfg);
  auto rec = gadgets::relu_recipe(cfg);
  auto m0 = t0.generate({rec, rec}), m1 = t1.generate({rec, rec});
  // Same correction words on both sides; counters stay in lockstep.
  EXPECT_EQ(m0[0].intervals[0].lower.cws, m1[0].intervals[0].lower.cws);
  EXPECT_EQ(t0.counter(), t1.counter());
  EXPECT_NE(m0[0].intervals[0].lower.cws, m0[1].intervals[0].lower.cws);
  // The pair passes the exhaustive ReLU oracle.
  Rng rng(10);
  for (std::int64_t x = -255; x <= 255; ++x) {
    std::array<Material, 2> mats = {m0[0], m1[0]};
    u64 v = cfg.p.from_signed(x), a = rng.uniform(cfg.p.value());
    auto out = gadgets::run_local(cfg, mats, {std::vector<u64>{a}, std::vector<u64>{cfg.p.sub(v, a)}});
    ASSERT_EQ(cfg.p.to_signed(cfg.p.add(out[0][0], out[1][0])), std::max<std::int64_t>(x, 0)) << x;
  }
}

TEST(MultiTee, MaterialIdenticalToSingleTeeForAllKinds) {
  auto cfg = FieldConfig::of(1021, 2);
  auto seeds = test_seeds(12);
  auto log = std::make_shared<ViewLog>();
  auto recipes = all_kinds(cfg);
  std::array<std::vector<Material>, 2> dist, single;
  for (unsigned b = 0; b < 2; ++b) {
    MultiTeeServer mt(b, seeds, cfg, log);
    dist[b] = mt.generate(recipes);
    SingleTee st(b, seeds, cfg);
    single[b] = st.generate(recipes);
    EXPECT_EQ(mt.counter(), st.counter());
    EXPECT_EQ(mt.stats().gates.prg_calls_in_protocol, 0u);
    // One node expansion per enclave per seed per level.
    std::uint64_t trees = 0;
    for (const auto& r : recipes) trees += 2 * r.intervals.size() + r.points.size();
    EXPECT_EQ(mt.stats().node_expansions, 3 * 2 * trees * cfg.domain_bits);
  }
  for (unsigned b = 0; b < 2; ++b)
    for (std::size_t k = 0; k < recipes.size(); ++k)
      EXPECT_EQ(bytes_of(dist[b][k]), bytes_of(single[b][k])) << "server " << b << " kind " << k;
  // Full-table evaluation over the 10-bit key domain.
  for (std::size_t k = 0; k < recipes.size(); ++k) {
    const auto& d = dist[0][k];
    for (std::size_t q = 0; q < d.intervals.size(); ++q)
      for (u64 x = 0; x < 1024; ++x)
        ASSERT_EQ(fss::dif_eval(d.intervals[q], x), fss::dif_eval(single[0][k].intervals[q], x));
    for (std::size_t q = 0; q < d.points.size(); ++q)
      for (u64 x = 0; x < 1024; ++x) ASSERT_EQ(fss::dpf_eval(d.points[q], x), fss::dpf_eval(single[0][k].points[q], x));
  }
  EXPECT_EQ(log->violation(), "");
  EXPECT_GT(log->events(), 0u);
}

TEST(MultiTee, DistributedMaterialPassesGadgetOracles) {
  auto cfg = FieldConfig::of(1021, 0);
  auto seeds = test_seeds(13);
  std::vector<gadgets::Recipe> recs = {gadgets::relu_recipe(cfg), gadgets::max_two_recipe(cfg)};
  MultiTeeServer s0(0, seeds, cfg), s1(1, seeds, cfg);
  auto m0 = s0.generate(recs), m1 = s1.generate(recs);
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    std::int64_t x = static_cast<std::int64_t>(rng.uniform(401)) - 200, y = static_cast<std::int64_t>(rng.uniform(401)) - 200;
    auto split = [&](std::vector<std::int64_t> v) {
      std::array<std::vector<u64>, 2> s;
      for (auto e : v) {
        u64 a = rng.uniform(cfg.p.value());
        s[0].push_back(a);
        s[1].push_back(cfg.p.sub(cfg.p.from_signed(e), a));
      }
      return s;
    };
    auto r = gadgets::run_local(cfg, {m0[0], m1[0]}, split({x}));
    ASSERT_EQ(cfg.p.to_signed(cfg.p.add(r[0][0], r[1][0])), std::max<std::int64_t>(x, 0));
    auto mx = gadgets::run_local(cfg, {m0[1], m1[1]}, split({x, y}));
    ASSERT_EQ(cfg.p.to_signed(cfg.p.add(mx[0][0], mx[1][0])), std::max(x, y));
  }
}

TEST(MultiTee, ZeroPayloadGivesZeroSumKeys) {
  auto cfg = FieldConfig::of(1021, 0);
  gadgets::Recipe r;
  r.mask_count = 1;
  r.intervals.push_back({gadgets::MaskExpr::mask(0), gadgets::MaskExpr::mask(0, 100), {gadgets::MaskExpr::constant_of(0)}});
  r.points.push_back({gadgets::MaskExpr::mask(0, 5), {gadgets::MaskExpr::constant_of(0)}});
  auto seeds = test_seeds(15);
  MultiTeeServer s0(0, seeds, cfg), s1(1, seeds, cfg);
  auto a = s0.generate({r})[0], b = s1.generate({r})[0];
  for (u64 x = 0; x < 1024; ++x) {
    EXPECT_EQ(cfg.p.add(fss::dif_eval(a.intervals[0], x)[0], fss::dif_eval(b.intervals[0], x)[0]), 0u);
    EXPECT_EQ(cfg.p.add(fss::dpf_eval(a.points[0], x)[0], fss::dpf_eval(b.points[0], x)[0]), 0u);
  }
}

TEST(MultiTee, AndGateCountIndependentOfPrgOutputWidth) {
  auto cfg = FieldConfig::of(2251799813824513ULL, 12);
  auto seeds = test_seeds(16);
  auto recipe = [](std::size_t L) {
    gadgets::Recipe r;
    r.mask_count = 1;
    std::vector<gadgets::MaskExpr> pay(L, gadgets::MaskExpr::mask(0, 3));
    r.intervals.push_back({gadgets::MaskExpr::mask(0), gadgets::MaskExpr::mask(0, 1000), pay});
    r.points.push_back({gadgets::MaskExpr::mask(0, 7), pay});
    return r;
  };
  std::uint64_t gates[2], mults[2], bytes[2];
  std::size_t widths[2] = {1, 8};
  for (int w = 0; w < 2; ++w) {
    MultiTeeServer mt(0, seeds, cfg);
    auto m = mt.generate({recipe(widths[w])});
    gates[w] = mt.stats().gates.and_gates;
    mults[w] = mt.stats().gates.mults;
    bytes[w] = mt.stats().enclave_bytes;
    EXPECT_EQ(mt.stats().gates.prg_calls_in_protocol, 0u);
    SingleTee st(0, seeds, cfg);
    EXPECT_EQ(bytes_of(m[0]), bytes_of(st.generate({recipe(widths[w])})[0]));
  }
  EXPECT_EQ(gates[0], gates[1]);
  EXPECT_GT(mults[1], mults[0]);
  EXPECT_GT(bytes[1], bytes[0]);
}
