#include "selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <string>

#include "duet/engine/cluster.hpp"
#include "duet/fss/keys.hpp"
#include "duet/gadgets/eval.hpp"
#include "duet/hss/triples.hpp"
#include "duet/ring/fixed_point.hpp"
#include "duet/tee/enclave.hpp"

namespace duet::cli {

namespace {

using Check = std::function<std::string()>;  // empty string on success

std::string fss_suite(std::uint64_t seed) {
  Rng rng(seed);
  const Modulus p(65537);
  const unsigned bits = 8;
  for (int t = 0; t < 8; ++t) {
    const u64 alpha = rng.uniform(256);
    std::vector<u64> beta{rng.uniform(p.value()), rng.uniform(p.value())};
    auto [k0, k1] = fss::dpf_gen(alpha, beta, bits, p, rng);
    u64 lo = rng.uniform(256), hi = rng.uniform(256);
    if (lo == hi) hi = (hi + 1) % 256;
    auto [d0, d1] = fss::dif_gen_cyclic(lo, hi, beta, 256, bits, p, rng);
    for (u64 x = 0; x < 256; ++x) {
      auto a = fss::dpf_eval(k0, x), b = fss::dpf_eval(k1, x);
      auto c = fss::dif_eval(d0, x), d = fss::dif_eval(d1, x);
      const bool inside = lo < hi ? (x >= lo && x < hi) : (x >= lo || x < hi);
      for (std::size_t i = 0; i < beta.size(); ++i) {
        if (p.add(a[i], b[i]) != (x == alpha ? beta[i] : 0)) return "dpf share sum wrong at x=" + std::to_string(x);
        if (p.add(c[i], d[i]) != (inside ? beta[i] : 0)) return "dif share sum wrong at x=" + std::to_string(x);
      }
    }
  }
  return "";
}

std::int64_t open1(const std::array<std::vector<u64>, 2>& o, const Modulus& p, std::size_t i = 0) {
  return p.to_signed(p.add(o[0][i], o[1][i]));
}

std::array<std::vector<u64>, 2> share_signed(const std::vector<std::int64_t>& xs, const Modulus& p, Rng& rng) {
  std::vector<u64> v;
  for (auto x : xs) v.push_back(p.from_signed(x));
  return engine::share_vector(v, p, rng);
}

std::string gadget_suite(std::uint64_t seed) {
  Rng rng(seed);
  const auto cfg = gadgets::FieldConfig::of(1021, 2);
  const Modulus& p = cfg.p;
  const std::int64_t M = 1021 / 4 - 1;
  auto run = [&](const gadgets::Recipe& rec, const std::vector<std::int64_t>& xs) {
    gadgets::RngTape tape(rng, p);
    auto mats = gadgets::build_material(rec, cfg, tape);
    return gadgets::run_local(cfg, std::move(mats), share_signed(xs, p, rng));
  };
  auto relu = gadgets::relu_recipe(cfg);
  for (std::int64_t x = -M; x <= M; ++x)
    if (open1(run(relu, {x}), p) != std::max<std::int64_t>(x, 0)) return "relu wrong at " + std::to_string(x);
  auto mt = gadgets::max_two_recipe(cfg);
  for (int t = 0; t < 2000; ++t) {
    std::int64_t x = std::int64_t(rng.uniform(2 * M + 1)) - M, y = std::int64_t(rng.uniform(2 * M + 1)) - M;
    if (open1(run(mt, {x, y}), p) != std::max(x, y)) return "max_two wrong";
  }
  for (std::uint32_t k = 2; k <= 8; ++k) {
    auto mp = gadgets::maxpool_recipe(cfg, k);
    auto am = gadgets::argmax_recipe(cfg, k);
    for (int t = 0; t < 40; ++t) {
      std::vector<std::int64_t> xs(k);
      for (auto& v : xs) v = std::int64_t(rng.uniform(17)) - 8;
      const auto best = *std::max_element(xs.begin(), xs.end());
      if (open1(run(mp, xs), p) != best) return "maxpool wrong at k=" + std::to_string(k);
      auto o = run(am, xs);
      for (std::size_t i = 0; i < k; ++i)
        if (open1(o, p, i) != (xs[i] == best ? std::int64_t(i + 1) : 0)) return "argmax wrong at k=" + std::to_string(k);
    }
  }
  for (auto f : {gadgets::SplineFunction::Sigmoid, gadgets::SplineFunction::Tanh})
    for (double x = -8; x <= 8; x += 1.0 / 64)
      if (std::abs(gadgets::spline_real(f, x) - gadgets::spline_exact(f, x)) > 0.02) return "spline error above 0.02";
  return "";
}

std::string hss_suite(const ProtocolParams& params, std::uint64_t seed) {
  auto ctx = RingContext::create(params);
  Rng rng(seed);
  std::vector<hss::TripleJob> jobs{{8, 8}, {32, 5}};
  std::vector<std::vector<u64>> B;
  for (const auto& j : jobs) B.push_back(rng.uniform_vec(j.n * j.m, params.p));
  auto plan = hss::plan_packed(jobs, params.N);
  auto run = hss::generate_triples_local(ctx, plan, B, rng);
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (!hss::check_triple(run.reconstructed[j].a, B[j], run.reconstructed[j].c, ctx->p()))
      return "triple " + std::to_string(j) + " fails c = a*B";
  return "";
}

std::string tee_suite(std::uint64_t seed) {
  const auto cfg = gadgets::FieldConfig::of(1021, 2);
  auto seeds = tee::SeedSet::derive(block_from_u64(seed, 77));
  std::vector<gadgets::Recipe> recs{gadgets::relu_recipe(cfg), gadgets::max_two_recipe(cfg),
                                    gadgets::spline_recipe(cfg, gadgets::SplineFunction::Tanh),
                                    gadgets::argmax_recipe(cfg, 3)};
  for (unsigned b = 0; b < 2; ++b) {
    tee::SingleTee single(b, seeds, cfg);
    auto log = std::make_shared<tee::ViewLog>();
    tee::MultiTeeServer multi(b, seeds, cfg, log);
    auto a = single.generate(recs), m = multi.generate(recs);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      ByteWriter wa, wm;
      gadgets::write_material(wa, a[i]);
      gadgets::write_material(wm, m[i]);
      if (wa.bytes() != wm.bytes()) return "multi-enclave material differs for recipe " + std::to_string(i);
    }
    if (!log->violation().empty()) return log->violation();
  }
  return "";
}

std::string engine_suite(const ProtocolParams& params, std::uint64_t seed) {
  engine::ClusterConfig cfg;
  cfg.params = params;
  cfg.seed = seed;
  Rng rng(seed);
  auto m = engine::sample_model("mfnn", params.p, params.fp_scale, rng);
  engine::Cluster c(cfg);
  c.setup();
  c.load_model(m);
  int agree = 0;
  for (int t = 0; t < 5; ++t) {
    auto x = engine::sample_input(m, rng);
    auto got = c.run(x);
    agree += engine::label_of(got.output) == engine::label_of(engine::reference_infer(m, x).output);
  }
  if (agree < 4) return "label agreement " + std::to_string(agree) + "/5";
  for (unsigned b = 0; b < 2; ++b) {
    auto rep = c.report(b);
    if (rep.peer[static_cast<std::size_t>(transport::Phase::Online)].payload_bytes_sent !=
        5 * 8 * engine::online_elements(m))
      return "online payload differs from the closed form";
  }
  for (const auto& e : c.recorder()->entries()) {
    if (e.cls != transport::ChannelClass::WideArea) continue;
    auto k = static_cast<transport::MsgKind>(e.header.kind);
    const bool peer = e.channel == "s0-s1" || e.channel == "s1-s0";
    if (peer && k != transport::MsgKind::MaskedReveal && k != transport::MsgKind::CiphertextExchange)
      return "undeclared wide-area frame kind on " + e.channel;
  }
  return "";
}

}  // namespace

int run_selftest(const ProtocolParams& params, std::uint64_t seed, std::ostream& out) {
  const std::vector<std::pair<std::string, Check>> suites = {
      {"fss", [&] { return fss_suite(seed); }},
      {"gadgets", [&] { return gadget_suite(seed); }},
      {"hss", [&] { return hss_suite(params, seed); }},
      {"tee", [&] { return tee_suite(seed); }},
      {"engine", [&] { return engine_suite(params, seed); }},
  };
  int failures = 0;
  for (const auto& [name, fn] : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string err;
    try {
      err = fn();
    } catch (const std::exception& e) {
      err = e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "selftest." << name << "=" << (err.empty() ? "pass" : "fail") << "\n";
    out << "selftest." << name << ".seconds=" << s << "\n";
    if (!err.empty()) {
      out << "selftest." << name << ".error=" << err << "\n";
      ++failures;
    }
  }
  out << "selftest=" << (failures ? "fail" : "pass") << "\n";
  return failures;
}

}  // namespace duet::cli
