#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <set>

#include "duet/common/error.hpp"
#include "duet/common/random.hpp"
#include "duet/ring/fixed_point.hpp"
#include "duet/ring/ntt.hpp"
#include "duet/ring/params.hpp"
#include "duet/ring/poly.hpp"

using namespace duet;

namespace {

// Values recomputed offline with an independent primality test.
constexpr u64 kTestP = 2251799813824513ULL;
constexpr u64 kProdP = 2251799814045697ULL;
constexpr u64 kToyP = 536874497ULL;

const RingContextPtr& test_ctx() {
  static RingContextPtr ctx = RingContext::create(ProtocolParams::standard_test());
  return ctx;
}

const RingContextPtr& toy_ctx() {
  static RingContextPtr ctx = RingContext::create(ProtocolParams::insecure_toy());
  return ctx;
}

}  // namespace

TEST(Modulus, BasicIdentities) {
  Modulus m(kTestP);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    u64 a = rng.uniform(kTestP), b = rng.uniform(kTestP);
    EXPECT_EQ(m.sub(m.add(a, b), b), a);
    EXPECT_EQ(m.add(a, m.neg(a)), 0u);
    if (a != 0) {
      EXPECT_EQ(m.mul(a, m.inv(a)), 1u);
    }
    EXPECT_EQ(m.from_signed(m.to_signed(a)), a);
  }
  EXPECT_THROW(Modulus(12).inv(4), ModulusError);
}

TEST(Modulus, ShoupMatchesPlainMultiply) {
  Modulus m(2305843009213616129ULL);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    u64 a = rng.uniform(m.value()), w = rng.uniform(m.value());
    EXPECT_EQ(m.mul_shoup(a, w, m.shoup(w)), m.mul(a, w));
  }
}

TEST(Primes, KnownSmallCases) {
  EXPECT_TRUE(is_prime(2));
  EXPECT_TRUE(is_prime(7681));
  EXPECT_FALSE(is_prime(561));
  EXPECT_FALSE(is_prime(3215031751ULL));
  EXPECT_TRUE(is_prime(2305843009213693951ULL));
  EXPECT_EQ(next_prime_congruent_one(100, 16), 113u);
}

TEST(Params, PresetsMatchIndependentSearch) {
  auto prod = ProtocolParams::production();
  EXPECT_EQ(prod.N, 8192u);
  EXPECT_EQ(prod.p, kProdP);
  EXPECT_EQ(prod.q_primes.size(), 3u);
  auto t = ProtocolParams::standard_test();
  EXPECT_EQ(t.p, kTestP);
  EXPECT_EQ(t.q_primes, (std::vector<u64>{2305843009213616129ULL, 2305843009213554689ULL, 2305843009213501441ULL}));
  auto toy = ProtocolParams::insecure_toy();
  EXPECT_EQ(toy.p, kToyP);
  EXPECT_TRUE(toy.insecure);
  EXPECT_EQ(toy.q_primes.size(), 2u);
  EXPECT_EQ(t.domain_bits(), 52u);
}

TEST(Params, TextRoundTripAndValidation) {
  auto pp = ProtocolParams::standard_test();
  EXPECT_EQ(ProtocolParams::from_text(pp.to_text()), pp);
  auto bad = pp;
  bad.lambda = 80;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = pp;
  bad.p = kTestP + 2;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = pp;
  bad.q_primes.resize(1);
  EXPECT_THROW(bad.validate(), ParameterError);
  EXPECT_THROW(ProtocolParams::from_text("p=7\n"), ParameterError);
}

TEST(Ntt, MatchesSchoolbookNegacyclic) {
  for (const auto* ctx : {&toy_ctx(), &test_ctx()}) {
    const auto& tab = (*ctx)->p_ntt();
    const Modulus& m = tab.modulus();
    std::size_t n = tab.size();
    Rng rng(3);
    auto a = rng.uniform_vec(n, m.value());
    auto b = rng.uniform_vec(n, m.value());
    auto expect = negacyclic_mul_naive(a, b, m);
    auto fa = a, fb = b;
    tab.forward(fa);
    tab.forward(fb);
    for (std::size_t i = 0; i < n; ++i) fa[i] = m.mul(fa[i], fb[i]);
    tab.inverse(fa);
    EXPECT_EQ(fa, expect);
  }
}

TEST(Ntt, RoundTripAllLimbs) {
  const auto& ctx = test_ctx();
  Rng rng(4);
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    auto v = rng.uniform_vec(ctx->degree(), ctx->q(i).value());
    auto w = v;
    ctx->q_ntt(i).forward(w);
    ctx->q_ntt(i).inverse(w);
    EXPECT_EQ(v, w);
  }
}

TEST(Ntt, SlotsAreEvaluationsAtOddRootPowers) {
  const auto& ctx = toy_ctx();
  const Modulus& p = ctx->p();
  Rng rng(5);
  auto coeffs = rng.uniform_vec(ctx->degree(), p.value());
  auto slots = poly_to_vec(RingPoly::from_coeffs(ctx, coeffs));
  // Every slot must equal a(x) at a distinct primitive 2N-th root.
  std::set<u64> roots;
  u64 psi = ctx->p_ntt().psi();
  std::map<u64, u64> evals;
  for (std::size_t k = 0; k < ctx->degree(); ++k) {
    u64 x = p.pow(psi, 2 * k + 1);
    u64 acc = 0;
    for (std::size_t j = ctx->degree(); j-- > 0;) acc = p.add(p.mul(acc, x), coeffs[j]);
    evals[acc]++;
  }
  for (u64 s : slots) EXPECT_TRUE(evals.count(s));
}

TEST(RingPoly, SlotPackingIsHomomorphic) {
  const auto& ctx = test_ctx();
  const Modulus& p = ctx->p();
  Rng rng(6);
  auto u = rng.uniform_vec(ctx->degree(), p.value());
  auto v = rng.uniform_vec(ctx->degree(), p.value());
  auto pu = vec_to_poly(ctx, u), pv = vec_to_poly(ctx, v);
  EXPECT_EQ(poly_to_vec(pu), u);
  auto prod = poly_to_vec(pu * pv);
  auto sum = poly_to_vec(pu + pv);
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_EQ(prod[i], p.mul(u[i], v[i]));
    EXPECT_EQ(sum[i], p.add(u[i], v[i]));
  }
}

TEST(RingPoly, ShortVectorsArePadded) {
  const auto& ctx = toy_ctx();
  std::vector<u64> v{1, 2, 3};
  auto s = poly_to_vec(vec_to_poly(ctx, v));
  EXPECT_EQ(s[0], 1u);
  EXPECT_EQ(s[2], 3u);
  for (std::size_t i = 3; i < s.size(); ++i) EXPECT_EQ(s[i], 0u);
  std::vector<u64> too_long(ctx->degree() + 1, 0);
  EXPECT_THROW(vec_to_poly(ctx, too_long), DimensionError);
}

TEST(RingPoly, ModulusTagsAreChecked) {
  const auto& ctx = toy_ctx();
  auto a = RingPoly::zero(ctx, ModTag::P);
  auto b = RingPoly::zero(ctx, ModTag::Q);
  EXPECT_THROW(a + b, ModulusError);
  EXPECT_THROW(poly_to_vec(b), ModulusError);
  auto other = RingContext::create(ProtocolParams::generate(512, 29, 8, 30, true));
  EXPECT_THROW(a + RingPoly::zero(other, ModTag::P), DimensionError);
}

TEST(RingPoly, RnsMultiplyMatchesBigIntegerProduct) {
  using boost::multiprecision::cpp_int;
  const auto& ctx = toy_ctx();
  std::size_t n = ctx->degree();
  cpp_int q = 1;
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) q *= ctx->q(i).value();
  Rng rng(7);
  // Small signed integer polynomials so the product is exactly known.
  std::vector<std::int64_t> a(n), b(n);
  for (auto& x : a) x = static_cast<std::int64_t>(rng.uniform(2001)) - 1000;
  for (auto& x : b) x = static_cast<std::int64_t>(rng.uniform(2001)) - 1000;
  auto A = RingPoly::zero(ctx, ModTag::Q), B = RingPoly::zero(ctx, ModTag::Q);
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      A.limb(i)[j] = ctx->q(i).from_signed(a[j]);
      B.limb(i)[j] = ctx->q(i).from_signed(b[j]);
    }
  }
  auto C = (A * B).to_coeff();
  std::vector<cpp_int> ref(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      cpp_int prod = cpp_int(a[i]) * b[j];
      if (i + j < n) ref[i + j] += prod; else ref[i + j - n] -= prod;
    }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
      cpp_int r = ref[j] % ctx->q(i).value();
      if (r < 0) r += ctx->q(i).value();
      EXPECT_EQ(C.limb(i)[j], r.convert_to<u64>());
    }
  }
}

TEST(Serialization, PolyAndVectorRoundTrip) {
  const auto& ctx = toy_ctx();
  Rng rng(8);
  auto a = RingPoly::from_coeffs(ctx, rng.uniform_vec(ctx->degree(), ctx->p().value()));
  auto bytes = serialize_poly(a);
  EXPECT_EQ(bytes.size(), 16 + 8 * ctx->degree());
  EXPECT_EQ(deserialize_poly(ctx, bytes), a);
  auto q = lift_centered(a);
  EXPECT_EQ(deserialize_poly(ctx, serialize_poly(q)), q);
  EXPECT_EQ(q.tag(), ModTag::Q);

  std::vector<u64> v{0, 1, ctx->p().value() - 1};
  auto vb = serialize_field_vector(v);
  EXPECT_EQ(deserialize_field_vector(vb, ctx->p()), v);
  vb.pop_back();
  EXPECT_THROW(deserialize_field_vector(vb, ctx->p()), FormatError);
  auto bad = serialize_field_vector(std::vector<u64>{ctx->p().value()});
  EXPECT_THROW(deserialize_field_vector(bad, ctx->p()), RangeError);
}

TEST(FixedPoint, EncodingExamples) {
  Modulus p(kTestP);
  FixedPoint fp(p, 12);
  EXPECT_EQ(fp.encode(1.5), 6144u);
  EXPECT_EQ(fp.encode(-1.0), kTestP - 4096);
  EXPECT_DOUBLE_EQ(fp.decode(fp.encode(-3.25)), -3.25);
  EXPECT_THROW(fp.encode(1e15), RangeError);
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    double x = (static_cast<double>(rng.uniform(1u << 30)) / (1u << 30) - 0.5) * 2000;
    EXPECT_NEAR(fp.decode(fp.encode(x)), x, std::ldexp(1.0, -12));
  }
}

TEST(Truncation, ExactWithinOneAndRareFailures) {
  // Enumerate every split of each secret for a small prime.
  Modulus p(10007);
  const unsigned f = 3;
  for (std::int64_t z : {0, 1, -1, 37, -37, 200, -200, 2000, -2000}) {
    u64 ze = p.from_signed(z);
    std::int64_t want = z >> f;
    std::size_t failures = 0;
    for (u64 s0 = 0; s0 < p.value(); ++s0) {
      u64 s1 = p.sub(ze, s0);
      u64 out = p.add(truncate_share(0, s0, f, p), truncate_share(1, s1, f, p));
      std::int64_t got = p.to_signed(out);
      if (std::llabs(got - want) > 1) ++failures;
    }
    EXPECT_LE(failures, static_cast<std::size_t>(2 * std::llabs(z) + 1)) << "z=" << z;
  }
  EXPECT_EQ(truncate_public(p.from_signed(-9), 3, p), p.from_signed(-2));
}
