#include <benchmark/benchmark.h>

#include "duet/engine/cluster.hpp"
#include "duet/fss/keys.hpp"
#include "duet/gadgets/eval.hpp"
#include "duet/hss/triples.hpp"
#include "duet/ring/poly.hpp"
#include "duet/tee/enclave.hpp"

using namespace duet;

namespace {

const Modulus& field() {
  static const Modulus p(ProtocolParams::standard_test().p);
  return p;
}

void BM_DpfGen(benchmark::State& st) {
  Rng rng(1);
  const unsigned bits = static_cast<unsigned>(st.range(0));
  std::vector<u64> beta{1};
  for (auto _ : st) {
    auto k = fss::dpf_gen(rng.uniform(u64{1} << std::min(bits, 62u)), beta, bits, field(), rng);
    benchmark::DoNotOptimize(k);
  }
}
BENCHMARK(BM_DpfGen)->Arg(20)->Arg(52);

void BM_DpfEval(benchmark::State& st) {
  Rng rng(2);
  const unsigned bits = static_cast<unsigned>(st.range(0));
  std::vector<u64> beta{1};
  auto [k0, k1] = fss::dpf_gen(5, beta, bits, field(), rng);
  u64 x = 0;
  for (auto _ : st) benchmark::DoNotOptimize(fss::dpf_eval(k0, x++));
}
BENCHMARK(BM_DpfEval)->Arg(20)->Arg(52);

void BM_DifEval(benchmark::State& st) {
  Rng rng(3);
  std::vector<u64> beta{1};
  const u64 p = field().value();
  auto [k0, k1] = fss::dif_gen_cyclic(p / 4, p / 2, beta, p, ceil_log2(p), field(), rng);
  u64 x = 0;
  for (auto _ : st) benchmark::DoNotOptimize(fss::dif_eval(k0, x++));
}
BENCHMARK(BM_DifEval);

void BM_ReluOnline(benchmark::State& st) {
  const auto cfg = gadgets::FieldConfig::of(field().value(), 12);
  Rng rng(4);
  auto rec = gadgets::relu_recipe(cfg);
  for (auto _ : st) {
    st.PauseTiming();
    gadgets::RngTape tape(rng, cfg.p);
    auto mats = gadgets::build_material(rec, cfg, tape);
    std::array<std::vector<u64>, 2> in{{{rng.uniform(cfg.p.value())}, {rng.uniform(cfg.p.value())}}};
    st.ResumeTiming();
    benchmark::DoNotOptimize(gadgets::run_local(cfg, std::move(mats), std::move(in)));
  }
}
BENCHMARK(BM_ReluOnline);

void BM_MaterialGen(benchmark::State& st) {
  const auto cfg = gadgets::FieldConfig::of(field().value(), 12);
  auto seeds = tee::SeedSet::derive(block_from_u64(9));
  std::vector<gadgets::Recipe> recs(static_cast<std::size_t>(st.range(1)), gadgets::relu_recipe(cfg));
  if (st.range(0) == 1) {
    tee::SingleTee t(0, seeds, cfg);
    for (auto _ : st) benchmark::DoNotOptimize(t.generate(recs));
  } else {
    tee::MultiTeeServer t(0, seeds, cfg);
    for (auto _ : st) benchmark::DoNotOptimize(t.generate(recs));
  }
  st.SetItemsProcessed(st.iterations() * st.range(1));
}
BENCHMARK(BM_MaterialGen)->Args({1, 32})->Args({3, 4})->ArgNames({"enclaves", "relus"})->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ForwardNtt(benchmark::State& st) {
  auto ctx = RingContext::create(ProtocolParams::standard_test());
  Rng rng(5);
  auto a = rng.uniform_vec(ctx->degree(), ctx->q(0).value());
  for (auto _ : st) {
    ctx->q_ntt(0).forward(a);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ForwardNtt);

void BM_TripleGeneration(benchmark::State& st) {
  auto ctx = RingContext::create(ProtocolParams::standard_test());
  Rng rng(6);
  const std::size_t n = static_cast<std::size_t>(st.range(0));
  std::vector<hss::TripleJob> jobs{{n, n}};
  std::vector<std::vector<u64>> B{rng.uniform_vec(n * n, ctx->p().value())};
  auto plan = hss::plan_packed(jobs, ctx->degree());
  for (auto _ : st) benchmark::DoNotOptimize(hss::generate_triples_local(ctx, plan, B, rng));
}
BENCHMARK(BM_TripleGeneration)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_InferenceMfnn(benchmark::State& st) {
  engine::ClusterConfig cfg;
  cfg.tee = st.range(0) == 3 ? engine::TeeMode::Multi : engine::TeeMode::Single;
  Rng rng(7);
  auto m = engine::sample_model("mfnn", cfg.params.p, cfg.params.fp_scale, rng);
  engine::Cluster c(cfg);
  c.setup();
  c.load_model(m);
  auto x = engine::sample_input(m, rng);
  for (auto _ : st) benchmark::DoNotOptimize(c.run(x));
  auto t = c.traffic();
  st.counters["wide_area_online_bytes"] = benchmark::Counter(
      double(t.of(transport::ChannelClass::WideArea, transport::Phase::Online).wire_bytes_sent),
      benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_InferenceMfnn)->Arg(1)->ArgName("enclaves")->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
