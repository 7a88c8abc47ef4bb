#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <set>
#include <tuple>
#include <thread>

#include "duet/common/error.hpp"
#include "duet/hss/dealer.hpp"
#include "duet/hss/lpr.hpp"
#include "duet/hss/noise.hpp"
#include "duet/hss/pack.hpp"
#include "duet/hss/triples.hpp"

using namespace duet;
using namespace duet::hss;
using boost::multiprecision::cpp_int;

namespace {

const RingContextPtr& toy() {
  static RingContextPtr c = RingContext::create(ProtocolParams::insecure_toy());
  return c;
}

const RingContextPtr& standard() {
  static RingContextPtr c = RingContext::create(ProtocolParams::standard_test());
  return c;
}

// Independent route: CRT-reconstruct t in [0, q) and compute
// floor((2 t p + q) / 2q) mod p.
std::vector<u64> exact_round(const RingPoly& t) {
  const auto& ctx = t.context();
  RingPoly c = t.as(Repr::Coeff);
  cpp_int q = 1;
  for (std::size_t i = 0; i < ctx->q_limbs(); ++i) q *= ctx->q(i).value();
  std::vector<u64> out;
  for (std::size_t j = 0; j < ctx->degree(); ++j) {
    cpp_int x = 0;
    for (std::size_t i = 0; i < ctx->q_limbs(); ++i) {
      cpp_int qi = ctx->q(i).value();
      cpp_int Qi = q / qi;
      // Qi^{-1} mod qi by Fermat.
      cpp_int inv = boost::multiprecision::powm(Qi % qi, qi - 2, qi);
      x += cpp_int(c.limb(i)[j]) * Qi * inv;
    }
    x %= q;
    cpp_int r = (2 * x * ctx->p().value() + q) / (2 * q);
    out.push_back(static_cast<u64>(r % ctx->p().value()));
  }
  return out;
}

RingPoly random_plain(const RingContextPtr& ctx, Rng& rng) {
  return vec_to_poly(ctx, rng.uniform_vec(ctx->degree(), ctx->p().value()));
}

}  // namespace

TEST(Lpr, EncryptDecryptAndNoise) {
  for (const auto* ctx : {&toy(), &standard()}) {
    Rng rng(51);
    auto [sk, pk] = keygen(*ctx, rng);
    auto m1 = random_plain(*ctx, rng), m2 = random_plain(*ctx, rng);
    auto c1 = encrypt(pk, m1, rng), c2 = encrypt(pk, m2, rng);
    EXPECT_EQ(decrypt(sk, c1), m1);
    EXPECT_LE(measure_noise(sk, c1, m1), c1.noise_bound);
    auto sum = ct_add(c1, c2);
    EXPECT_EQ(decrypt(sk, sum), m1 + m2);
    EXPECT_LE(measure_noise(sk, sum, m1 + m2), sum.noise_bound);
    EXPECT_DOUBLE_EQ(sum.noise_bound, 2 * fresh_noise_bound(**ctx) + (*ctx)->q_mod_p());
    EXPECT_LT(sum.noise_bound, noise_budget(**ctx));
  }
}

TEST(Rounding, RnsFastPathMatchesBigIntegerOracle) {
  for (const auto* ctx : {&toy(), &standard()}) {
    Rng rng(52);
    for (int t = 0; t < 3; ++t) {
      RingPoly x = sample_uniform_q(*ctx, rng).to_coeff();
      EXPECT_EQ(poly_to_vec(scale_round_to_p(x)), poly_to_vec(RingPoly::from_coeffs(*ctx, exact_round(x))));
    }
  }
}

TEST(HssMult, SharesReconstructSlotwiseProduct) {
  for (const auto* ctx : {&toy(), &standard()}) {
    Rng rng(53);
    const Modulus& p = (*ctx)->p();
    auto keys = dealer_setup(*ctx, rng);
    auto mvec = rng.uniform_vec((*ctx)->degree(), p.value());
    auto yvec = rng.uniform_vec((*ctx)->degree(), p.value());
    auto y0 = rng.uniform_vec(yvec.size(), p.value());
    auto y1 = vec_sub(yvec, y0, p);
    auto conv = dealer_convert_column(*ctx, keys.key_share, y0, y1, rng);
    auto ct = ct_add(encrypt(keys.pk, vec_to_poly(*ctx, mvec), rng), encrypt(keys.pk, RingPoly::zero(*ctx, ModTag::P), rng));
    auto s0 = hss_mult(ct, conv[0].y, conv[0].ys);
    auto s1 = hss_mult(ct, conv[1].y, conv[1].ys);
    auto got = poly_to_vec(s0 + s1);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i], p.mul(mvec[i], yvec[i])) << i;
  }
}

TEST(Dealer, RejectsOversizedColumn) {
  Rng rng(54);
  auto keys = dealer_setup(toy(), rng);
  std::vector<u64> big(toy()->degree() + 1, 0);
  EXPECT_THROW(dealer_convert_column(toy(), keys.key_share, big, big, rng), DimensionError);
}

TEST(PackPlan, EveryColumnCoveredExactlyOnce) {
  const std::size_t N = 256;
  Rng rng(55);
  for (int t = 0; t < 50; ++t) {
    std::vector<TripleJob> jobs;
    std::size_t J = 1 + rng.uniform(6);
    for (std::size_t j = 0; j < J; ++j) jobs.push_back({1 + rng.uniform(600), 1 + rng.uniform(40)});
    for (auto plan : {plan_packed(jobs, N), plan_unpacked(jobs, N)}) {
      std::map<std::tuple<std::size_t, std::size_t, std::size_t>, int> cover;  // (job, row_begin, col)
      for (std::size_t g = 0; g < plan.polys.size(); ++g) {
        const auto& poly = plan.polys[g];
        ASSERT_LE(poly.segments.size(), plan.segs_per_poly);
        ASSERT_LE(poly.segments.size() * plan.seg_len, N);
        for (std::size_t l = 0; l < poly.b_polys; ++l) {
          for (const auto& seg : poly.segments) {
            const auto& sj = plan.subjobs[seg.subjob];
            std::size_t col = l * sj.copies + seg.copy;
            if (col < sj.m) cover[{sj.job, sj.row_begin, col}]++;
          }
        }
      }
      std::size_t expected = 0;
      for (const auto& sj : plan.subjobs) expected += sj.m;
      ASSERT_EQ(cover.size(), expected);
      for (const auto& [k, v] : cover) ASSERT_EQ(v, 1);
    }
  }
}

TEST(PackPlan, SmallJobsShareOnePolynomial) {
  const std::size_t N = 2048;
  for (std::size_t k : {2u, 4u, 8u}) {
    std::vector<TripleJob> jobs(k, TripleJob{N / k, 16});
    auto packed = plan_packed(jobs, N);
    auto unpacked = plan_unpacked(jobs, N);
    EXPECT_EQ(packed.ciphertexts(), 1u);
    EXPECT_EQ(unpacked.ciphertexts(), k);
    EXPECT_EQ(unpacked.mults(), k * packed.mults());
  }
  // A lone small job uses spare segments to cut the B polynomial count.
  std::vector<TripleJob> one = {{N / 4, 16}};
  EXPECT_EQ(plan_packed(one, N).mults(), 4u);
  EXPECT_EQ(plan_unpacked(one, N).mults(), 16u);
}

TEST(Triples, TwoPartyGenerationIsCorrect) {
  const auto& ctx = toy();
  const Modulus& p = ctx->p();
  Rng rng(56);
  auto keys = dealer_setup(ctx, rng);
  std::vector<TripleJob> jobs = {{40, 7}, {100, 3}, {300, 2}, {60, 60}};
  auto plan = plan_packed(jobs, ctx->degree());
  std::vector<std::vector<u64>> B(jobs.size()), B0(jobs.size()), B1(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    B[j] = rng.uniform_vec(jobs[j].n * jobs[j].m, p.value());
    B0[j] = rng.uniform_vec(B[j].size(), p.value());
    B1[j] = vec_sub(B[j], B0[j], p);
  }
  auto in0 = conversion_inputs(plan, B0), in1 = conversion_inputs(plan, B1);
  ConvertedPlan conv0(plan.polys.size()), conv1(plan.polys.size());
  for (std::size_t g = 0; g < plan.polys.size(); ++g) {
    for (std::size_t l = 0; l < in0[g].size(); ++l) {
      auto c = dealer_convert_column(ctx, keys.key_share, in0[g][l], in1[g][l], rng);
      conv0[g].push_back(std::move(c[0]));
      conv1[g].push_back(std::move(c[1]));
    }
  }
  auto [ch0, ch1] = transport::make_inproc_pair("m0", "m1", transport::ChannelClass::WideArea);
  std::vector<TripleShare> t1;
  TripleStats st1;
  std::thread th([&, ch1 = ch1] {
    Rng r1(99);
    t1 = generate_triples(1, plan, keys.pk, conv1, *ch1, r1, &st1);
  });
  Rng r0(98);
  TripleStats st0;
  auto t0 = generate_triples(0, plan, keys.pk, conv0, *ch0, r0, &st0);
  th.join();
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto a = vec_add(t0[j].a, t1[j].a, p);
    auto c = vec_add(t0[j].c, t1[j].c, p);
    EXPECT_TRUE(check_triple(a, B[j], c, p)) << "job " << j;
  }
  EXPECT_EQ(st0.ciphertexts_sent, plan.ciphertexts());
  EXPECT_EQ(ch0->meter().total().messages_sent, 1u);
  EXPECT_EQ(ch0->meter().total().payload_bytes_sent, plan.ciphertexts() * ciphertext_bytes(*ctx));
}
