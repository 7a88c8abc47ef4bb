#include "duet/hss/triples.hpp"

#include <algorithm>
#include <thread>

#include "duet/common/error.hpp"
#include "duet/hss/noise.hpp"

namespace duet::hss {

std::vector<TripleShare> generate_triples(int party, const PackPlan& plan, const PublicKey& pk,
                                          const ConvertedPlan& converted, transport::Channel& peer, Rng& rng,
                                          TripleStats* stats) {
  const auto& ctx = pk.a.context();
  const Modulus& p = ctx->p();
  if (plan.N != ctx->degree()) throw DimensionError("packing plan degree does not match the ring");
  if (converted.size() != plan.polys.size()) throw DimensionError("converted plan does not match packing plan");

  std::vector<std::vector<u64>> a(plan.jobs.size());
  std::vector<std::vector<u64>> c(plan.jobs.size());
  for (std::size_t j = 0; j < plan.jobs.size(); ++j) {
    a[j] = rng.uniform_vec(plan.jobs[j].n, p.value());
    c[j].assign(plan.jobs[j].m, 0);
  }

  std::vector<Ciphertext> mine;
  ByteWriter w;
  for (std::size_t g = 0; g < plan.polys.size(); ++g) {
    mine.push_back(encrypt(pk, vec_to_poly(ctx, plan.a_slots(g, a)), rng));
    write_ciphertext(w, mine.back());
  }
  peer.send(transport::MsgKind::CiphertextExchange, w.bytes());
  Bytes in = peer.recv_expect(transport::MsgKind::CiphertextExchange);
  ByteReader r(in);
  std::vector<Ciphertext> theirs;
  for (std::size_t g = 0; g < plan.polys.size(); ++g) theirs.push_back(read_ciphertext(ctx, r));
  r.expect_done();

  const double budget = noise_budget(*ctx);
  double worst = 0;
  for (std::size_t g = 0; g < plan.polys.size(); ++g) {
    // Both parties must add in the same order to get identical ciphertexts.
    Ciphertext sum = party == 0 ? ct_add(mine[g], theirs[g]) : ct_add(theirs[g], mine[g]);
    if (sum.noise_bound > budget) throw ProtocolAbort("ciphertext noise bound exceeds the budget");
    worst = std::max(worst, sum.noise_bound);
    if (converted[g].size() != plan.polys[g].b_polys) throw DimensionError("converted B polynomial count mismatch");
    for (std::size_t l = 0; l < plan.polys[g].b_polys; ++l) {
      RingPoly out = hss_mult(sum, converted[g][l].y, converted[g][l].ys);
      plan.accumulate(g, l, poly_to_vec(out), c, p);
    }
  }
  if (stats) {
    stats->ciphertexts_sent += plan.polys.size();
    stats->mults += plan.mults();
    stats->bytes_sent += w.size();
    stats->max_noise_bound = std::max(stats->max_noise_bound, worst);
  }
  std::vector<TripleShare> out(plan.jobs.size());
  for (std::size_t j = 0; j < plan.jobs.size(); ++j) out[j] = {std::move(a[j]), std::move(c[j])};
  return out;
}

std::vector<std::vector<std::vector<u64>>> conversion_inputs(const PackPlan& plan,
                                                            std::span<const std::vector<u64>> b_share) {
  std::vector<std::vector<std::vector<u64>>> out(plan.polys.size());
  for (std::size_t g = 0; g < plan.polys.size(); ++g) {
    for (std::size_t l = 0; l < plan.polys[g].b_polys; ++l) out[g].push_back(plan.b_slots(g, l, b_share));
  }
  return out;
}

std::vector<u64> vec_mat(std::span<const u64> x, std::span<const u64> B, std::size_t n, std::size_t m,
                         const Modulus& p) {
  if (x.size() != n || B.size() != n * m) throw DimensionError("vector-matrix shape mismatch");
  std::vector<u128> acc(m, 0);
  std::vector<u64> out(m, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const u64 xr = x[r];
    const u64* row = B.data() + r * m;
    for (std::size_t col = 0; col < m; ++col) {
      acc[col] += static_cast<u128>(xr) * row[col];
      // Reduce before the 128-bit accumulator can overflow.
      if ((r & 7) == 7) acc[col] %= p.value();
    }
  }
  for (std::size_t col = 0; col < m; ++col) out[col] = p.reduce128(acc[col]);
  return out;
}

bool check_triple(std::span<const u64> a, std::span<const u64> B, std::span<const u64> c, const Modulus& p) {
  if (B.size() % a.size() != 0) return false;
  std::size_t m = B.size() / a.size();
  if (c.size() != m) return false;
  auto want = vec_mat(a, B, a.size(), m, p);
  return std::equal(want.begin(), want.end(), c.begin());
}

LocalTripleRun generate_triples_local(const RingContextPtr& ctx, const PackPlan& plan,
                                      std::span<const std::vector<u64>> B, Rng& rng) {
  const Modulus& p = ctx->p();
  auto keys = dealer_setup(ctx, rng);
  std::vector<std::vector<u64>> B0(B.size()), B1(B.size());
  for (std::size_t j = 0; j < B.size(); ++j) {
    B0[j] = rng.uniform_vec(B[j].size(), p.value());
    B1[j] = B[j];
    vec_sub_inplace(B1[j], B0[j], p);
  }
  auto in0 = conversion_inputs(plan, B0), in1 = conversion_inputs(plan, B1);
  ConvertedPlan conv0(plan.polys.size()), conv1(plan.polys.size());
  for (std::size_t g = 0; g < plan.polys.size(); ++g)
    for (std::size_t l = 0; l < in0[g].size(); ++l) {
      auto c = dealer_convert_column(ctx, keys.key_share, in0[g][l], in1[g][l], rng);
      conv0[g].push_back(std::move(c[0]));
      conv1[g].push_back(std::move(c[1]));
    }
  auto [ch0, ch1] = transport::make_inproc_pair("t0", "t1", transport::ChannelClass::WideArea);
  Rng r0 = rng.fork(), r1 = rng.fork();
  std::vector<TripleShare> t1;
  std::exception_ptr err;
  std::thread th([&, ch = ch1] {
    try {
      t1 = generate_triples(1, plan, keys.pk, conv1, *ch, r1);
    } catch (...) {
      err = std::current_exception();
      ch->close();
    }
  });
  LocalTripleRun run;
  std::vector<TripleShare> t0;
  try {
    t0 = generate_triples(0, plan, keys.pk, conv0, *ch0, r0, &run.stats0);
  } catch (...) {
    ch0->close();
    th.join();
    throw;
  }
  th.join();
  if (err) std::rethrow_exception(err);
  run.ciphertexts = run.stats0.ciphertexts_sent;
  for (std::size_t j = 0; j < t0.size(); ++j) {
    TripleShare r = t0[j];
    vec_add_inplace(r.a, t1[j].a, p);
    vec_add_inplace(r.c, t1[j].c, p);
    run.reconstructed.push_back(std::move(r));
  }
  return run;
}

}  // namespace duet::hss
