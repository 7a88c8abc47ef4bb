#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "duet/common/error.hpp"
#include "duet/engine/cluster.hpp"
#include "duet/engine/model.hpp"
#include "duet/hss/triples.hpp"
#include "duet/ring/fixed_point.hpp"

using namespace duet;
using namespace duet::engine;
using transport::ChannelClass;
using transport::MsgKind;
using transport::Phase;

namespace {

ClusterConfig toy_config(TeeMode mode = TeeMode::Single) {
  ClusterConfig c;
  c.params = ProtocolParams::insecure_toy();
  c.tee = mode;
  c.seed = 11;
  return c;
}

ModelManifest toy_model(const std::string& arch, std::uint64_t seed = 3) {
  Rng rng(seed);
  auto p = ProtocolParams::insecure_toy();
  return sample_model(arch, p.p, p.fp_scale, rng);
}

// Independent float forward pass over decoded weights.
std::vector<double> float_logits(const ModelManifest& m, std::span<const u64> x) {
  const Modulus p(m.p);
  const FixedPoint fp(p, m.fp_scale);
  std::vector<double> cur = fp.decode(x);
  std::vector<double> z;
  for (const auto& l : m.layers) {
    if (l.kind != LayerKind::Dense) throw std::logic_error("float oracle covers dense layers");
    z.assign(l.m, 0.0);
    for (std::size_t c = 0; c < l.m; ++c) {
      double acc = fp.decode_scaled(l.bias[c], 2 * m.fp_scale);
      for (std::size_t r = 0; r < l.n; ++r) acc += cur[r] * fp.decode(l.weights[r * l.m + c]);
      z[c] = acc;
    }
    cur = z;
    if (l.act == Activation::Relu)
      for (auto& v : cur) v = std::max(v, 0.0);
  }
  return z;
}

}  // namespace

TEST(Manifest, RoundTripsThroughBytes) {
  for (const auto& arch : sample_architectures()) {
    auto m = toy_model(arch);
    auto back = ModelManifest::deserialize(m.serialize());
    EXPECT_EQ(back.header_text(), m.header_text());
    ASSERT_EQ(back.layers.size(), m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      EXPECT_EQ(back.layers[i].weights, m.layers[i].weights);
      EXPECT_EQ(back.layers[i].bias, m.layers[i].bias);
      EXPECT_EQ(back.layers[i].n, m.layers[i].n);
      EXPECT_EQ(back.layers[i].m, m.layers[i].m);
    }
    back.validate();
  }
}

TEST(Manifest, RejectsBadShapesAndMagnitudes) {
  auto m = toy_model("mfnn");
  auto bad = m;
  bad.layers[1].n = 31;
  EXPECT_THROW(bad.validate(), DimensionError);
  bad = m;
  bad.layers[0].weights[0] = m.p / 2;
  EXPECT_THROW(bad.validate(), RangeError);
  EXPECT_NO_THROW(bad.validate(true));
  auto bytes = m.serialize();
  bytes[0] = 'x';
  EXPECT_THROW(ModelManifest::deserialize(bytes), FormatError);
}

TEST(Lowering, ConvMatchesDirectConvolution) {
  const Modulus p(ProtocolParams::insecure_toy().p);
  Rng rng(5);
  for (auto shape : {ConvShape{1, 6, 6, 2, 3, 3, 1, 0}, ConvShape{2, 7, 5, 3, 3, 2, 2, 1}, ConvShape{3, 4, 4, 1, 4, 4, 1, 0}}) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.conv = shape;
    l.n = std::size_t{shape.in_c} * shape.in_h * shape.in_w;
    l.m = std::size_t{shape.out_c} * shape.out_h() * shape.out_w();
    l.weights = rng.uniform_vec(std::size_t{shape.out_c} * shape.in_c * shape.k_h * shape.k_w, p.value());
    l.bias = rng.uniform_vec(shape.out_c, p.value());
    auto y = lowered_matrix(l, p, 8);
    auto bias = lowered_bias(l);
    for (int t = 0; t < 5; ++t) {
      auto x = rng.uniform_vec(l.n, p.value());
      auto z = hss::vec_mat(x, y, l.n, l.m, p);
      vec_add_inplace(z, bias, p);
      EXPECT_EQ(z, conv_direct(l, x, p));
    }
  }
}

TEST(Lowering, AvgPoolAveragesWindows) {
  const auto params = ProtocolParams::insecure_toy();
  const Modulus p(params.p);
  const FixedPoint fp(p, params.fp_scale);
  ModelManifest m;
  m.p = params.p;
  m.fp_scale = params.fp_scale;
  m.input_dim = 2 * 4 * 4;
  Layer l;
  l.kind = LayerKind::AvgPool;
  l.pool = PoolShape{2, 4, 4, 2};
  l.n = 32;
  l.m = 8;
  m.layers.push_back(l);
  m.validate();
  std::vector<double> xs(32);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = 0.25 * double(int(i % 7) - 3);
  auto out = reference_infer(m, fp.encode(xs)).output;
  ASSERT_EQ(out.size(), 8u);
  for (unsigned c = 0; c < 2; ++c)
    for (unsigned i = 0; i < 2; ++i)
      for (unsigned j = 0; j < 2; ++j) {
        double s = 0;
        for (unsigned a = 0; a < 2; ++a)
          for (unsigned b = 0; b < 2; ++b) s += xs[c * 16 + (2 * i + a) * 4 + 2 * j + b];
        EXPECT_NEAR(fp.decode(out[c * 4 + i * 2 + j]), s / 4, 1.0 / 256) << c << i << j;
      }
}

TEST(Reference, LogitsTrackFloatForwardPass) {
  auto m = toy_model("mfnn");
  Rng rng(8);
  const FixedPoint fp(Modulus(m.p), m.fp_scale);
  for (int t = 0; t < 20; ++t) {
    auto x = sample_input(m, rng);
    auto ref = reference_infer(m, x);
    auto want = float_logits(m, x);
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(fp.decode(ref.logits[i]), want[i], 0.05);
    auto label = label_of(ref.output);
    ASSERT_FALSE(label.empty());
    auto best = std::max_element(want.begin(), want.end()) - want.begin();
    EXPECT_NEAR(fp.decode(ref.logits[label[0] - 1]), want[static_cast<std::size_t>(best)], 0.05);
  }
}

TEST(Cluster, ModelLoadMasksWeights) {
  Cluster c(toy_config());
  c.setup();
  auto m = toy_model("mfnn");
  c.load_model(m);
  auto d0 = c.debug(0), d1 = c.debug(1);
  const Modulus p(m.p);
  ASSERT_EQ(d0.b_share.size(), m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    EXPECT_EQ(d0.f[i], d1.f[i]);
    auto y = reconstruct(d0.b_share[i], d1.b_share[i], p);
    vec_add_inplace(y, d0.f[i], p);
    EXPECT_EQ(y, lowered_matrix(m.layers[i], p, m.fp_scale));
    EXPECT_NE(d0.f[i], m.layers[i].weights);
  }
}

TEST(Cluster, ExactWithoutTruncation) {
  auto cfg = toy_config();
  cfg.truncate = false;
  Cluster c(cfg);
  c.setup();
  // One dense ReLU layer with small weights keeps scale-2f values in range.
  auto m = toy_model("relu-layer");
  c.load_model(m);
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    auto x = sample_input(m, rng);
    auto got = c.run(x);
    auto ref = reference_infer(m, x, false);
    EXPECT_EQ(got.output, ref.output);
    EXPECT_EQ(got.logits, ref.logits);
  }
}

TEST(Cluster, TruncatedInferenceTracksReference) {
  for (const auto& arch : {"mfnn", "ifnn", "mcnn"}) {
    Cluster c(toy_config());
    c.setup();
    auto m = toy_model(arch);
    c.load_model(m);
    Rng rng(6);
    const Modulus p(m.p);
    int label_agree = 0;
    for (int t = 0; t < 6; ++t) {
      auto x = sample_input(m, rng);
      auto got = c.run(x);
      auto ref = reference_infer(m, x);
      ASSERT_EQ(got.logits.size(), ref.logits.size());
      for (std::size_t i = 0; i < ref.logits.size(); ++i)
        EXPECT_LE(std::llabs(p.to_signed(p.sub(got.logits[i], ref.logits[i]))), 40) << arch << " logit " << i;
      label_agree += label_of(got.output) == label_of(ref.output);
    }
    EXPECT_GE(label_agree, 5) << arch;
  }
}

TEST(Cluster, SessionMaterialIsSingleUse) {
  Cluster c(toy_config());
  c.setup();
  auto m = toy_model("relu-layer");
  c.load_model(m);
  Rng rng(2);
  auto x = sample_input(m, rng);
  c.preprocess(7);
  c.infer(7, x);
  try {
    c.infer(7, x);
    FAIL() << "second use of session material accepted";
  } catch (const ProtocolAbort& e) {
    EXPECT_NE(std::string(e.what()).find("consumed"), std::string::npos) << e.what();
  }
}

TEST(Cluster, PreprocessTwiceForOneSessionIsRejected) {
  Cluster c(toy_config());
  c.setup();
  c.load_model(toy_model("relu-layer"));
  c.preprocess(1);
  EXPECT_THROW(c.preprocess(1), ProtocolAbort);
}

TEST(Cluster, MultiTeeOutputsIdenticalToSingleTee) {
  auto m = toy_model("mfnn");
  Cluster a(toy_config(TeeMode::Single)), b(toy_config(TeeMode::Multi));
  for (auto* c : {&a, &b}) {
    c->setup();
    c->load_model(m);
  }
  EXPECT_EQ(a.dealer_seeds(), b.dealer_seeds());
  Rng rng(9);
  for (int t = 0; t < 3; ++t) {
    auto x = sample_input(m, rng);
    auto ra = a.run(x), rb = b.run(x);
    EXPECT_EQ(ra.output, rb.output);
    EXPECT_EQ(ra.logits, rb.logits);
  }
  EXPECT_TRUE(b.view_log()->violation().empty()) << b.view_log()->violation();
  EXPECT_GT(b.view_log()->events(), 0u);
  EXPECT_GT(b.report(0).tee_node_expansions, 0u);
}

TEST(Cluster, OnlinePeerTrafficMatchesClosedForm) {
  for (const auto& arch : {"relu-layer", "mfnn", "mcnn"}) {
    Cluster c(toy_config());
    c.setup();
    auto m = toy_model(arch);
    c.load_model(m);
    Rng rng(1);
    c.run(sample_input(m, rng));
    for (unsigned b = 0; b < 2; ++b) {
      auto rep = c.report(b);
      const auto& on = rep.peer[static_cast<std::size_t>(Phase::Online)];
      EXPECT_EQ(on.payload_bytes_sent, 8 * online_elements(m)) << arch;
    }
  }
}

TEST(Cluster, PreprocessingTranscriptIndependentOfInput) {
  auto m = toy_model("mfnn");
  // Per-link transcripts; threads interleave links arbitrarily.
  std::array<std::map<std::string, std::vector<Bytes>>, 2> pre;
  for (int run = 0; run < 2; ++run) {
    Cluster c(toy_config());
    c.setup();
    c.load_model(m);
    Rng rng(100 + run);
    c.run(sample_input(m, rng));
    for (const auto& e : c.recorder()->entries(Phase::Preprocess)) {
      auto frame = transport::encode_frame(e.header, e.payload);
      pre[run][e.channel].push_back(std::move(frame));
    }
  }
  ASSERT_FALSE(pre[0].empty());
  ASSERT_TRUE(pre[0].count("s0-s1"));
  EXPECT_EQ(pre[0], pre[1]);
}

TEST(Cluster, WideAreaFramesAreDeclaredKinds) {
  auto m = toy_model("mfnn");
  Cluster c(toy_config(TeeMode::Multi));
  c.setup();
  c.load_model(m);
  Rng rng(3);
  c.run(sample_input(m, rng));
  for (const auto& e : c.recorder()->entries()) {
    if (e.cls != ChannelClass::WideArea) continue;
    const auto kind = static_cast<MsgKind>(e.header.kind);
    const bool server_link = e.channel == "s0-s1" || e.channel == "s1-s0";
    if (server_link) {
      EXPECT_TRUE(kind == MsgKind::MaskedReveal || kind == MsgKind::CiphertextExchange) << e.channel;
    } else {
      EXPECT_TRUE(kind == MsgKind::ShareDelivery || kind == MsgKind::Control) << e.channel;
    }
  }
}

TEST(Cluster, SocketModeMatchesInProc) {
  auto m = toy_model("mfnn");
  auto cfg = toy_config(TeeMode::Single);
  Cluster a(cfg);
  cfg.transport = TransportKind::Socket;
  Cluster b(cfg);
  Rng rng(12);
  for (auto* c : {&a, &b}) {
    c->setup();
    c->load_model(m);
  }
  for (int t = 0; t < 2; ++t) {
    auto x = sample_input(m, rng);
    EXPECT_EQ(a.run(x).output, b.run(x).output);
  }
  auto ta = a.traffic(), tb = b.traffic();
  EXPECT_EQ(ta.of(ChannelClass::WideArea, Phase::Online).payload_bytes_sent,
            tb.of(ChannelClass::WideArea, Phase::Online).payload_bytes_sent);
  b.shutdown();
}

TEST(Cluster, TrustedTestRefusedOffLoopback) {
  auto cfg = toy_config();
  cfg.transport = TransportKind::Socket;
  cfg.host = "10.1.2.3";
  EXPECT_THROW(Cluster c(cfg), ParameterError);
}

TEST(Cluster, DebugRefusedOutsideTrustedTest) {
  auto cfg = toy_config();
  cfg.trusted_test = false;
  Cluster c(cfg);
  c.setup();
  EXPECT_THROW(c.debug(0), ProtocolAbort);
}

TEST(Cluster, SingleDenseArgmaxExhaustiveSixBitInputs) {
  auto cfg = toy_config();
  cfg.truncate = false;
  Cluster c(cfg);
  c.setup();
  const Modulus p(cfg.params.p);
  ModelManifest m;
  m.p = cfg.params.p;
  m.fp_scale = cfg.params.fp_scale;
  m.input_dim = 2;
  Layer l;
  l.n = 2;
  l.m = 4;
  l.act = Activation::Argmax;
  l.act_arity = 4;
  for (std::int64_t w : {3, -1, 2, 0, 1, 2, -2, 1}) l.weights.push_back(p.from_signed(w));
  for (std::int64_t b : {0, 5, -4, 1}) l.bias.push_back(p.from_signed(b));
  m.layers.push_back(l);
  c.load_model(m);
  int agree = 0, total = 0;
  for (std::int64_t x0 = -32; x0 < 32; x0 += 3)
    for (std::int64_t x1 = -32; x1 < 32; ++x1) {
      std::vector<u64> x{p.from_signed(x0), p.from_signed(x1)};
      auto got = c.run(x);
      auto ref = reference_infer(m, x, false);
      agree += got.output == ref.output;
      ++total;
    }
  EXPECT_EQ(agree, total);
}

TEST(Cluster, ZeroInputWithoutBiasGivesAllTiedLabels) {
  Cluster c(toy_config());
  c.setup();
  auto m = toy_model("ifnn");
  for (auto& l : m.layers) std::fill(l.bias.begin(), l.bias.end(), 0);
  c.load_model(m);
  std::vector<u64> x(m.input_dim, 0);
  auto got = c.run(x);
  std::vector<u64> all(10);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i + 1;
  EXPECT_EQ(got.output, all);
}

TEST(Cluster, SameSeedSameTranscriptDigest) {
  auto m = toy_model("mfnn");
  std::array<std::string, 2> d;
  for (int run = 0; run < 2; ++run) {
    Cluster c(toy_config(TeeMode::Multi));
    c.setup();
    c.load_model(m);
    Rng rng(5);
    c.run(sample_input(m, rng));
    d[run] = c.recorder()->digest();
  }
  EXPECT_EQ(d[0], d[1]);
  EXPECT_EQ(d[0].size(), 64u);
}
