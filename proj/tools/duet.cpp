#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "duet/common/error.hpp"
#include "duet/engine/cluster.hpp"
#include "duet/ring/fixed_point.hpp"
#include "selftest.hpp"

using namespace duet;
using namespace duet::engine;
using transport::ChannelClass;
using transport::Phase;

namespace {

constexpr double kYaoBytesPerRelu = 8300.0;  // reference garbled-circuit ReLU cost

ProtocolParams resolve_params(const std::string& s) {
  if (s == "standard_test" || s == "standard") return ProtocolParams::standard_test();
  if (s == "production") return ProtocolParams::production();
  if (s == "insecure_toy" || s == "toy") return ProtocolParams::insecure_toy();
  return ProtocolParams::load(s);
}

std::string strip_arch(std::string a) {
  const std::string suffix = "-scaled";
  if (a.size() > suffix.size() && a.compare(a.size() - suffix.size(), suffix.size(), suffix) == 0)
    a.resize(a.size() - suffix.size());
  return a;
}

std::string join(const std::vector<std::uint32_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s.empty() ? "none" : s;
}

std::vector<std::vector<u64>> read_inputs(const std::string& path, const ModelManifest& m) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read input file " + path);
  const FixedPoint fp(Modulus(m.p), m.fp_scale);
  std::vector<std::vector<u64>> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> xs;
    double v;
    while (ls >> v) xs.push_back(v);
    if (xs.size() != m.input_dim)
      throw DimensionError("input line has " + std::to_string(xs.size()) + " values, model expects " +
                           std::to_string(m.input_dim));
    out.push_back(fp.encode(xs));
  }
  if (out.empty()) throw Error("input file has no samples");
  return out;
}

void print_traffic(std::ostream& o, const transport::TrafficSummary& t) {
  for (std::size_t c = 0; c < transport::kChannelClasses; ++c)
    for (std::size_t ph = 0; ph < transport::kPhases; ++ph) {
      const auto& m = t.sent[c][ph];
      if (m.messages_sent == 0) continue;
      const std::string key = std::string("traffic.") + transport::to_string(static_cast<ChannelClass>(c)) + "." +
                              transport::to_string(static_cast<Phase>(ph));
      o << key << ".messages=" << m.messages_sent << "\n";
      o << key << ".payload_bytes=" << m.payload_bytes_sent << "\n";
      o << key << ".wire_bytes=" << m.wire_bytes_sent << "\n";
    }
}

std::uint64_t peer_online_payload(Cluster& c) {
  std::uint64_t s = 0;
  for (unsigned b = 0; b < 2; ++b) s += c.report(b).peer[static_cast<std::size_t>(Phase::Online)].payload_bytes_sent;
  return s;
}

std::uint64_t peer_online_wire(Cluster& c) {
  std::uint64_t s = 0;
  for (unsigned b = 0; b < 2; ++b) s += c.report(b).peer[static_cast<std::size_t>(Phase::Online)].wire_bytes_sent;
  return s;
}

struct RunFlags {
  std::string params = "standard_test";
  std::string mode = "single-tee";
  std::string transport = "inproc";
  std::string host = "127.0.0.1";
  std::string model;
  std::string input;
  std::uint64_t seed = 1;
  bool trusted_test = false;
  bool no_truncate = false;
  unsigned count = 1;

  void add_to(CLI::App* app) {
    app->add_option("--params", params, "standard_test, production, insecure_toy, or a params file");
    app->add_option("--mode", mode, "single-tee or multi-tee");
    app->add_option("--transport", transport, "inproc or socket");
    app->add_option("--host", host, "socket transport host");
    app->add_option("--seed", seed, "seed for every random choice");
    app->add_flag("--trusted-test", trusted_test, "allow reconstruction of intermediate values");
    app->add_flag("--no-truncate", no_truncate, "skip truncation after each multiply");
  }

  ClusterConfig cluster(const ProtocolParams& p) const {
    ClusterConfig c;
    c.params = p;
    c.tee = parse_tee_mode(mode);
    c.transport = parse_transport(transport);
    c.host = host;
    c.truncate = !no_truncate;
    c.trusted_test = trusted_test;
    c.seed = seed;
    return c;
  }
};

// Runs one phase and rethrows any failure tagged with the phase name.
template <typename F>
auto in_phase(const char* phase, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string("phase ") + phase + ": " + e.what());
  }
}

int cmd_gen_model(const std::string& arch_in, const std::string& params_s, std::uint64_t seed,
                  const std::string& out) {
  const auto params = resolve_params(params_s);
  const auto arch = strip_arch(arch_in);
  Rng rng(seed);
  auto m = sample_model(arch, params.p, params.fp_scale, rng);
  m.save(out);
  auto back = ModelManifest::load(out);
  back.validate();
  auto x = sample_input(back, rng);
  auto ref = reference_infer(back, x);
  std::cout << "command=gen-model\n";
  std::cout << "arch=" << arch << "\n";
  std::cout << "path=" << out << "\n";
  std::cout << "modulus=" << m.p << "\n";
  std::cout << "fp_scale=" << m.fp_scale << "\n";
  std::cout << "input_dim=" << m.input_dim << "\n";
  std::cout << "layers=" << m.layers.size() << "\n";
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    std::cout << "layer." << i << "=" << to_string(l.kind) << " " << l.n << "x" << l.m << " "
              << to_string(l.act, l.act_arity) << "\n";
  }
  std::cout << "output_dim=" << m.output_dim() << "\n";
  std::cout << "roundtrip=" << (back.serialize() == m.serialize() ? "ok" : "mismatch") << "\n";
  std::cout << "reference.smoke_output_dim=" << ref.output.size() << "\n";
  return back.serialize() == m.serialize() ? 0 : 1;
}

int cmd_infer(const RunFlags& f) {
  const auto params = resolve_params(f.params);
  auto m = ModelManifest::load(f.model);
  m.validate();
  std::vector<std::vector<u64>> inputs;
  if (f.input.empty() || f.input == "random") {
    Rng rng(f.seed, 7);
    for (unsigned i = 0; i < f.count; ++i) inputs.push_back(sample_input(m, rng));
  } else {
    inputs = read_inputs(f.input, m);
  }
  Cluster c(f.cluster(params));
  in_phase("setup", [&] { c.setup(); });
  in_phase("model-load", [&] { c.load_model(m); });
  const bool labelled = m.layers.back().act == Activation::Argmax;
  const Modulus p(m.p);
  std::cout << "command=infer\n";
  std::cout << "mode=" << to_string(c.config().tee) << "\n";
  std::cout << "transport=" << f.transport << "\n";
  std::cout << "samples=" << inputs.size() << "\n";
  unsigned agree = 0, exact = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto session = i + 1;
    in_phase("preprocess", [&] { c.preprocess(session); });
    auto got = in_phase("online", [&] { return c.infer(session, inputs[i]); });
    auto ref = reference_infer(m, inputs[i], !f.no_truncate);
    const std::string key = "sample." + std::to_string(i);
    if (labelled) {
      const auto gl = label_of(got.output), rl = label_of(ref.output);
      std::cout << key << ".label=" << join(gl) << "\n";
      std::cout << key << ".reference_label=" << join(rl) << "\n";
      agree += gl == rl;
    } else {
      agree += got.output == ref.output;
    }
    exact += got.output == ref.output;
    if (f.trusted_test) {
      std::int64_t dev = 0;
      for (std::size_t k = 0; k < ref.logits.size(); ++k)
        dev = std::max<std::int64_t>(dev, std::llabs(p.to_signed(p.sub(got.logits[k], ref.logits[k]))));
      std::cout << key << ".max_logit_deviation=" << dev << "\n";
    }
  }
  std::cout << "agreement=" << agree << "/" << inputs.size() << "\n";
  std::cout << "exact_outputs=" << exact << "/" << inputs.size() << "\n";
  const std::uint64_t want = 2ull * 8 * online_elements(m) * inputs.size();
  const std::uint64_t got = peer_online_payload(c);
  std::cout << "online.closed_form_payload_bytes=" << want << "\n";
  std::cout << "online.server_payload_bytes=" << got << "\n";
  std::cout << "online.budget_match=" << (want == got ? 1 : 0) << "\n";
  print_traffic(std::cout, c.traffic());
  if (c.config().transport == TransportKind::InProc) std::cout << "transcript.sha256=" << c.recorder()->digest() << "\n";
  c.shutdown();
  return want == got ? 0 : 2;
}

int cmd_bench(const RunFlags& f, const std::string& arch, double egress_price, const std::string& instance) {
  const auto params = resolve_params(f.params);
  ModelManifest m;
  if (!f.model.empty()) {
    m = ModelManifest::load(f.model);
  } else {
    Rng rng(f.seed, 3);
    m = sample_model(strip_arch(arch), params.p, params.fp_scale, rng);
  }
  m.validate();
  Cluster c(f.cluster(params));
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };
  auto t0 = clock::now();
  in_phase("setup", [&] { c.setup(); });
  const double setup_s = secs(t0);
  t0 = clock::now();
  in_phase("model-load", [&] { c.load_model(m); });
  const double load_s = secs(t0);
  Rng rng(f.seed, 9);
  double pre_s = 0, on_s = 0;
  for (unsigned i = 0; i < f.count; ++i) {
    auto x = sample_input(m, rng);
    t0 = clock::now();
    in_phase("preprocess", [&] { c.preprocess(i + 1); });
    pre_s += secs(t0);
    t0 = clock::now();
    in_phase("online", [&] { c.infer(i + 1, x); });
    on_s += secs(t0);
  }
  const double n = f.count;
  std::size_t relus = 0;
  for (const auto& l : m.layers)
    if (l.act == Activation::Relu) relus += l.m;
  auto t = c.traffic();
  const auto wa_online = t.of(ChannelClass::WideArea, Phase::Online);
  const auto wa_pre = t.of(ChannelClass::WideArea, Phase::Preprocess);
  const auto wa_load = t.of(ChannelClass::WideArea, Phase::ModelLoad);
  std::uint64_t local = 0;
  for (auto cls : {ChannelClass::LocalIntraServer, ChannelClass::EnclaveEnclave})
    local += t.of(cls).wire_bytes_sent;
  const double closed = 2.0 * 8 * double(online_elements(m));
  const double peer_wire = double(peer_online_wire(c)) / n;
  const double peer_payload = double(peer_online_payload(c)) / n;
  const auto cost = transport::CostModel::for_instance(instance, egress_price);

  std::cout << "command=bench\n";
  std::cout << "mode=" << to_string(c.config().tee) << "\n";
  std::cout << "inferences=" << f.count << "\n";
  std::cout << "layers=" << m.layers.size() << "\n";
  std::cout << "relus=" << relus << "\n";
  std::cout << "time.setup_s=" << setup_s << "\n";
  std::cout << "time.model_load_s=" << load_s << "\n";
  std::cout << "time.preprocess_s_per_inference=" << pre_s / n << "\n";
  std::cout << "time.online_s_per_inference=" << on_s / n << "\n";
  std::cout << "online.closed_form_payload_bytes=" << closed << "\n";
  std::cout << "online.server_payload_bytes_per_inference=" << peer_payload << "\n";
  std::cout << "online.server_wire_bytes_per_inference=" << peer_wire << "\n";
  std::cout << "online.wire_to_closed_form_ratio=" << peer_wire / closed << "\n";
  std::cout << "online.wide_area_wire_bytes_per_inference=" << double(wa_online.wire_bytes_sent) / n << "\n";
  std::cout << "preprocess.wide_area_wire_bytes_per_inference=" << double(wa_pre.wire_bytes_sent) / n << "\n";
  std::cout << "model_load.wide_area_wire_bytes=" << wa_load.wire_bytes_sent << "\n";
  std::cout << "local.wire_bytes_total=" << local << "\n";
  bool relu_only = true;
  std::size_t beaver = 0;
  for (const auto& l : m.layers) {
    relu_only &= l.act == Activation::Relu || l.act == Activation::Identity;
    if (l.uses_triple()) beaver += l.n;
  }
  if (relus && relu_only) {
    // Measured activation payload, per ReLU and direction.
    const double per_relu = (peer_payload - 2.0 * 8 * double(beaver)) / (2.0 * double(relus));
    std::cout << "relu.online_payload_bytes_per_direction=" << per_relu << "\n";
    std::cout << "relu.yao_reference_bytes=" << kYaoBytesPerRelu << "\n";
    std::cout << "relu.yao_ratio=" << kYaoBytesPerRelu / (2 * per_relu) << "\n";
  }
  const std::uint64_t wa_total = wa_online.wire_bytes_sent + wa_pre.wire_bytes_sent;
  const double cpu = (pre_s + on_s) / n;
  std::cout << "cost.instance=" << cost.instance << "\n";
  std::cout << "cost.egress_usd_per_gb=" << cost.egress_usd_per_gb << "\n";
  std::cout << "cost.egress_usd_per_inference=" << cost.egress_usd(wa_total) / n << "\n";
  std::cout << "cost.cpu_usd_per_inference=" << 2 * cost.cpu_usd(cpu) << "\n";
  print_traffic(std::cout, t);
  c.shutdown();
  return peer_wire / closed <= 2.0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"duet: two-server private inference with simulated enclaves"};
  app.require_subcommand(1);

  std::string arch = "mfnn", gen_params = "standard_test", out;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-model", "write a sample model manifest");
  gen->add_option("--arch", arch, "mfnn, ifnn, mcnn (optionally with -scaled) or relu-layer");
  gen->add_option("--params", gen_params, "protocol parameters");
  gen->add_option("--seed", gen_seed, "weight seed");
  gen->add_option("--out", out, "output path")->required();

  RunFlags inf;
  auto* infer = app.add_subcommand("infer", "run setup, model load, preprocessing and inference");
  inf.add_to(infer);
  infer->add_option("--model", inf.model, "model manifest")->required();
  infer->add_option("--input", inf.input, "text file, one sample per line, or 'random'");
  infer->add_option("--count", inf.count, "number of random samples");

  RunFlags st;
  st.params = "insecure_toy";
  auto* self = app.add_subcommand("selftest", "run the oracle suites");
  self->add_option("--params", st.params, "protocol parameters");
  self->add_option("--seed", st.seed, "seed");

  RunFlags bf;
  bf.count = 3;
  std::string bench_arch = "relu-layer", instance = "m5.4xlarge";
  double egress = 0.05;
  auto* bench = app.add_subcommand("bench", "meter phases and print a cost report");
  bf.add_to(bench);
  bench->add_option("--model", bf.model, "model manifest (default: sample architecture)");
  bench->add_option("--arch", bench_arch, "sample architecture when no model is given");
  bench->add_option("--count", bf.count, "inferences to average over");
  bench->add_option("--egress-usd-per-gb", egress, "wide-area egress price");
  bench->add_option("--instance", instance, "instance type for the cpu price");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen_model(arch, gen_params, gen_seed, out);
    if (*infer) return cmd_infer(inf);
    if (*self) return cli::run_selftest(resolve_params(st.params), st.seed, std::cout) ? 1 : 0;
    if (*bench) return cmd_bench(bf, bench_arch, egress, instance);
  } catch (const std::exception& e) {
    std::cout << "error=" << e.what() << "\n";
    std::cerr << "duet: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
