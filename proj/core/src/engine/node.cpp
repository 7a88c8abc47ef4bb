#include "duet/engine/node.hpp"

#include <chrono>
#include <cstring>

#include "duet/common/error.hpp"
#include "duet/ring/fixed_point.hpp"
#include "duet/ring/poly.hpp"

namespace duet::engine {

using transport::Channel;
using transport::ChannelPtr;
using transport::MsgKind;
using transport::Phase;

const char* to_string(TeeMode m) { return m == TeeMode::Multi ? "multi-tee" : "single-tee"; }

TeeMode parse_tee_mode(const std::string& s) {
  if (s == "single-tee" || s == "single") return TeeMode::Single;
  if (s == "multi-tee" || s == "multi") return TeeMode::Multi;
  throw ParameterError("unknown mode '" + s + "' (expected single-tee or multi-tee)");
}

void send_command(Channel& ch, Command c, std::uint64_t arg) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(c));
  w.u64(arg);
  ch.send(MsgKind::Control, w.bytes());
}

void send_reply(Channel& ch, bool ok, const std::string& message, std::span<const std::uint8_t> body) {
  ByteWriter w;
  w.u8(ok ? 0 : 1);
  w.str(message);
  w.raw(body);
  ch.send(MsgKind::Control, w.bytes());
}

Bytes expect_reply(Channel& ch, const std::string& who) {
  auto f = ch.recv();
  if (f.kind() != MsgKind::Control)
    throw TransportError(who + ": expected a reply, got " + transport::to_string(f.kind()));
  ByteReader r(f.payload);
  const bool ok = r.u8() == 0;
  std::string msg = r.str();
  if (!ok) throw ProtocolAbort(who + ": " + msg);
  auto rest = r.raw(r.remaining());
  return Bytes(rest.begin(), rest.end());
}

void NodeReport::write(ByteWriter& w) const {
  std::vector<const transport::MeterCounters*> all;
  for (const auto& cls : traffic.sent)
    for (const auto& c : cls) all.push_back(&c);
  for (const auto& c : peer) all.push_back(&c);
  for (const auto* c : all)
    for (auto v : {c->wire_bytes_sent, c->payload_bytes_sent, c->wire_bytes_received, c->payload_bytes_received,
                   c->messages_sent, c->messages_received, c->rounds, c->wait_ns})
      w.u64(v);
  for (double s : seconds) {
    std::uint64_t bits;
    std::memcpy(&bits, &s, 8);
    w.u64(bits);
  }
  for (auto v : {triple_ciphertexts, triple_mults, materials, material_bytes, tee_node_expansions, tee_and_gates,
                 tee_rounds})
    w.u64(v);
}

NodeReport NodeReport::read(ByteReader& r) {
  NodeReport n;
  std::vector<transport::MeterCounters*> all;
  for (auto& cls : n.traffic.sent)
    for (auto& c : cls) all.push_back(&c);
  for (auto& c : n.peer) all.push_back(&c);
  for (auto* c : all)
    for (auto* v : {&c->wire_bytes_sent, &c->payload_bytes_sent, &c->wire_bytes_received, &c->payload_bytes_received,
                    &c->messages_sent, &c->messages_received, &c->rounds, &c->wait_ns})
      *v = r.u64();
  for (double& s : n.seconds) {
    std::uint64_t bits = r.u64();
    std::memcpy(&s, &bits, 8);
  }
  for (auto* v : {&n.triple_ciphertexts, &n.triple_mults, &n.materials, &n.material_bytes, &n.tee_node_expansions,
                  &n.tee_and_gates, &n.tee_rounds})
    *v = r.u64();
  return n;
}

// ---------------------------------------------------------------------------
// TEE services

namespace {

void write_seed_frame(ByteWriter& w, std::uint16_t epoch, std::span<const std::pair<unsigned, Block>> seeds) {
  w.u16(epoch);
  w.u8(static_cast<std::uint8_t>(seeds.size()));
  for (const auto& [i, s] : seeds) {
    w.u8(static_cast<std::uint8_t>(i));
    w.raw(s);
  }
}

void read_seed_frame(std::span<const std::uint8_t> bytes, tee::SeedSet& out, std::array<bool, tee::kEnclaves>& seen) {
  ByteReader r(bytes);
  out.epoch = r.u16();
  const unsigned n = r.u8();
  for (unsigned k = 0; k < n; ++k) {
    const unsigned i = r.u8();
    if (i >= tee::kEnclaves || seen[i]) throw FormatError("seed delivery: bad enclave index");
    auto s = r.raw(16);
    std::memcpy(out.seeds[i].data(), s.data(), 16);
    seen[i] = true;
  }
  r.expect_done();
}

// One enclave; materials cross to the host over a local channel.
class SingleTeeService final : public TeeService {
 public:
  SingleTeeService(unsigned party, const tee::SeedSet& seeds, const gadgets::FieldConfig& cfg)
      : tee_(party, seeds, cfg) {
    std::tie(enclave_side_, host_side_) =
        transport::make_inproc_pair("tee" + std::to_string(party) + "-host", "host" + std::to_string(party) + "-tee",
                                    transport::ChannelClass::LocalIntraServer);
  }

  std::vector<gadgets::Material> generate(const std::vector<gadgets::Recipe>& recipes) override {
    auto mats = tee_.generate(recipes);
    for (const auto& m : mats) {
      ByteWriter w;
      gadgets::write_material(w, m);
      enclave_side_->send(MsgKind::MaterialDelivery, w.bytes());
    }
    std::vector<gadgets::Material> out;
    out.reserve(mats.size());
    for (std::size_t i = 0; i < mats.size(); ++i) {
      auto b = host_side_->recv_expect(MsgKind::MaterialDelivery);
      ByteReader r(b);
      out.push_back(gadgets::read_material(r));
      r.expect_done();
    }
    return out;
  }

  void set_phase(Phase ph) override {
    enclave_side_->set_phase(ph);
    host_side_->set_phase(ph);
  }
  void add_traffic(transport::TrafficSummary& t) const override {
    t.add(*enclave_side_);
    t.add(*host_side_);
  }
  void add_stats(NodeReport&) const override {}

 private:
  tee::SingleTee tee_;
  ChannelPtr enclave_side_, host_side_;
};

class MultiTeeService final : public TeeService {
 public:
  MultiTeeService(unsigned party, const tee::SeedSet& seeds, const gadgets::FieldConfig& cfg,
                  std::shared_ptr<tee::ViewLog> log)
      : server_(party, seeds, cfg, std::move(log)) {}

  std::vector<gadgets::Material> generate(const std::vector<gadgets::Recipe>& recipes) override {
    return server_.generate(recipes);
  }
  void set_phase(Phase ph) override { server_.set_phase(ph); }
  void add_traffic(transport::TrafficSummary& t) const override { server_.add_traffic(t); }
  void add_stats(NodeReport& r) const override {
    r.tee_node_expansions = server_.stats().node_expansions;
    r.tee_and_gates = server_.stats().gates.and_gates;
    r.tee_rounds = server_.stats().gates.rounds;
  }

 private:
  tee::MultiTeeServer server_;
};

}  // namespace

std::unique_ptr<TeeService> provision_tee(TeeMode mode, unsigned party, std::span<ChannelPtr> seed_links,
                                          const gadgets::FieldConfig& cfg, std::shared_ptr<tee::ViewLog> log) {
  const std::size_t want = mode == TeeMode::Multi ? tee::kEnclaves : 1;
  if (seed_links.size() != want) throw ParameterError("wrong number of enclave seed links");
  tee::SeedSet seeds;
  std::array<bool, tee::kEnclaves> seen{};
  for (auto& l : seed_links) read_seed_frame(l->recv_expect(MsgKind::SeedDelivery), seeds, seen);
  for (bool s : seen)
    if (!s) throw ProtocolAbort("enclave seed missing");
  if (mode == TeeMode::Multi) return std::make_unique<MultiTeeService>(party, seeds, cfg, std::move(log));
  return std::make_unique<SingleTeeService>(party, seeds, cfg);
}

// ---------------------------------------------------------------------------
// Server

ServerNode::ServerNode(NodeConfig cfg, NodeLinks links, std::shared_ptr<tee::ViewLog> log)
    : cfg_(std::move(cfg)),
      links_(std::move(links)),
      log_(std::move(log)),
      ctx_(RingContext::create(cfg_.params)),
      p_(cfg_.params.p),
      fcfg_(gadgets::FieldConfig::of(cfg_.params.p, cfg_.params.fp_scale)),
      rng_(cfg_.seed, 0x100 + cfg_.party) {
  if (cfg_.party > 1) throw ParameterError("server party must be 0 or 1");
  if (!links_.client || !links_.peer || !links_.dealer) throw ParameterError("server links missing");
}

ServerNode::~ServerNode() { shutdown_links(); }

void ServerNode::set_phase(Phase ph) {
  for (auto* ch : {&links_.client, &links_.peer, &links_.dealer}) (*ch)->set_phase(ph);
  for (auto& l : links_.tee_seed) l->set_phase(ph);
  if (tee_) tee_->set_phase(ph);
}

void ServerNode::account(Phase ph, double seconds) { stats_.seconds[static_cast<std::size_t>(ph)] += seconds; }

void ServerNode::shutdown_links() {
  for (auto* ch : {&links_.client, &links_.peer, &links_.dealer})
    if (*ch) (*ch)->close();
  for (auto& l : links_.tee_seed) l->close();
}

void ServerNode::serve() {
  for (;;) {
    Bytes cmd_bytes;
    try {
      cmd_bytes = links_.client->recv_expect(MsgKind::Control);
    } catch (...) {
      shutdown_links();
      throw;
    }
    ByteReader r(cmd_bytes);
    const auto cmd = static_cast<Command>(r.u8());
    const std::uint64_t arg = r.u64();
    try {
      const auto t0 = std::chrono::steady_clock::now();
      Phase ph = Phase::Setup;
      switch (cmd) {
        case Command::Setup: do_setup(); break;
        case Command::LoadModel: ph = Phase::ModelLoad; do_load_model(); break;
        case Command::Preprocess: ph = Phase::Preprocess; do_preprocess(arg); break;
        case Command::Infer: ph = Phase::Online; do_infer(arg); break;
        case Command::Report: do_report(); continue;
        case Command::Debug: do_debug(); continue;
        case Command::Shutdown: {
          ByteWriter w;
          w.u8(static_cast<std::uint8_t>(DealerOp::Done));
          links_.dealer->send(MsgKind::DealerRequest, w.bytes());
          send_reply(*links_.client, true, "bye");
          return;
        }
        default: throw FormatError("unknown command " + std::to_string(static_cast<int>(cmd)));
      }
      account(ph, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      send_reply(*links_.client, true, "ok");
    } catch (const std::exception& e) {
      try {
        send_reply(*links_.client, false, std::string("server ") + std::to_string(cfg_.party) + ": " + e.what());
      } catch (...) {
      }
      shutdown_links();
      throw;
    }
  }
}

void ServerNode::do_setup() {
  set_phase(Phase::Setup);
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(DealerOp::Setup));
  links_.dealer->send(MsgKind::DealerRequest, w.bytes());
  Bytes resp = links_.dealer->recv_expect(MsgKind::DealerResponse);
  ByteReader r(resp);
  hss::PublicKey pk;
  pk.b = read_poly(ctx_, r);
  pk.a = read_poly(ctx_, r);
  key_share_ = read_poly(ctx_, r);
  r.expect_done();
  pk_ = std::move(pk);
  tee_ = provision_tee(cfg_.tee, cfg_.party, links_.tee_seed, fcfg_, log_);
  tee_->set_phase(Phase::Setup);
  model_.reset();
  sessions_.clear();
}

void ServerNode::do_load_model() {
  set_phase(Phase::ModelLoad);
  if (!pk_) throw ProtocolAbort("model load before setup");
  Bytes mb = links_.client->recv_expect(MsgKind::ShareDelivery);
  ModelManifest m = ModelManifest::deserialize(mb);
  m.validate(true);
  if (m.p != cfg_.params.p) throw ParameterError("model modulus differs from the protocol modulus");
  if (m.fp_scale != cfg_.params.fp_scale) throw ParameterError("model fp_scale differs from the protocol fp_scale");

  layers_.clear();
  std::vector<hss::TripleJob> jobs;
  std::vector<std::vector<u64>> b_shares;
  for (const auto& l : m.layers) {
    LayerState st;
    if (l.act != Activation::Identity) {
      auto kind = static_cast<gadgets::GadgetKind>(l.act);
      auto rec = gadgets::recipe_for(fcfg_, kind, l.gadget_arity());
      st.recipes.assign(l.gadget_count(), rec);
    }
    if (l.uses_triple()) {
      st.job = jobs.size();
      jobs.push_back({l.n, l.m});
      auto y = lowered_matrix(l, p_, m.fp_scale);
      st.bias_share = lowered_bias(l);
      st.b_share = rng_.uniform_vec(l.n * l.m, p_.value());
      st.f = y;
      vec_sub_inplace(st.f, st.b_share, p_);
      links_.peer->send_words(MsgKind::MaskedReveal, st.f);
      b_shares.push_back(st.b_share);
    } else {
      st.public_map = lowered_matrix(l, p_, m.fp_scale);
    }
    layers_.push_back(std::move(st));
  }
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    auto& st = layers_[i];
    if (!m.layers[i].uses_triple()) continue;
    auto other = links_.peer->recv_words(MsgKind::MaskedReveal, st.f.size());
    vec_add_inplace(st.f, other, p_);
  }

  plan_ = hss::plan_packed(jobs, cfg_.params.N);
  auto inputs = hss::conversion_inputs(plan_, b_shares);
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(DealerOp::Convert));
  w.u32(static_cast<std::uint32_t>(inputs.size()));
  for (const auto& g : inputs) {
    w.u32(static_cast<std::uint32_t>(g.size()));
    for (const auto& col : g) write_field_vector(w, col);
  }
  links_.dealer->send(MsgKind::DealerRequest, w.bytes());
  Bytes resp = links_.dealer->recv_expect(MsgKind::DealerResponse);
  ByteReader r(resp);
  converted_.assign(inputs.size(), {});
  for (std::size_t g = 0; g < inputs.size(); ++g)
    for (std::size_t l = 0; l < inputs[g].size(); ++l) converted_[g].push_back(hss::read_converted(ctx_, r));
  r.expect_done();

  model_ = std::move(m);
  sessions_.clear();
}

void ServerNode::do_preprocess(std::uint64_t session) {
  set_phase(Phase::Preprocess);
  if (!model_) throw ProtocolAbort("preprocess before model load");
  if (sessions_.count(session)) throw ReuseError("session " + std::to_string(session) + " already has material");
  Rng srng(cfg_.seed ^ (session * 0x9E3779B97F4A7C15ull), 0x200 + cfg_.party);
  Session s;
  hss::TripleStats ts;
  s.triples = hss::generate_triples(static_cast<int>(cfg_.party), plan_, *pk_, converted_, *links_.peer, srng, &ts);
  stats_.triple_ciphertexts += ts.ciphertexts_sent;
  stats_.triple_mults += ts.mults;

  std::vector<gadgets::Recipe> all;
  for (const auto& st : layers_) all.insert(all.end(), st.recipes.begin(), st.recipes.end());
  auto mats = tee_->generate(all);
  std::size_t k = 0;
  for (const auto& st : layers_) {
    std::vector<gadgets::Material> lm;
    for (std::size_t i = 0; i < st.recipes.size(); ++i) {
      stats_.material_bytes += mats[k].size_bytes();
      lm.push_back(std::move(mats[k++]));
    }
    stats_.materials += lm.size();
    s.materials.push_back(std::move(lm));
  }
  sessions_.emplace(session, std::move(s));
}

void ServerNode::do_infer(std::uint64_t session) {
  set_phase(Phase::Online);
  if (!model_) throw ProtocolAbort("inference before model load");
  auto it = sessions_.find(session);
  if (it == sessions_.end()) throw ProtocolAbort("no preprocessed material for session " + std::to_string(session));
  if (it->second.consumed) throw ReuseError("session " + std::to_string(session) + " material already consumed");
  it->second.consumed = true;
  Session s = std::move(it->second);
  it->second.triples.clear();
  it->second.materials.clear();

  const int b = static_cast<int>(cfg_.party);
  const auto& m = *model_;
  auto x = links_.client->recv_words(MsgKind::ShareDelivery, m.input_dim);
  std::vector<u64> logits;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const auto& l = m.layers[li];
    auto& st = layers_[li];
    std::vector<u64> z;
    if (l.uses_triple()) {
      const auto& t = s.triples[st.job];
      // Open e = x - a, then x*Y = x*F + e*B + a*B.
      std::vector<u64> e = x;
      vec_sub_inplace(e, t.a, p_);
      links_.peer->send_words(MsgKind::MaskedReveal, e);
      auto e_peer = links_.peer->recv_words(MsgKind::MaskedReveal, e.size());
      vec_add_inplace(e, e_peer, p_);
      z = hss::vec_mat(x, st.f, l.n, l.m, p_);
      auto eb = hss::vec_mat(e, st.b_share, l.n, l.m, p_);
      vec_add_inplace(z, eb, p_);
      vec_add_inplace(z, t.c, p_);
      vec_add_inplace(z, st.bias_share, p_);
    } else {
      z = hss::vec_mat(x, st.public_map, l.n, l.m, p_);
    }
    if (cfg_.truncate) truncate_shares(b, z, m.fp_scale, p_);
    logits = z;

    if (l.act == Activation::Identity) {
      x = std::move(z);
      continue;
    }
    auto& mats = s.materials[li];
    const std::size_t arity = l.gadget_arity();
    std::vector<gadgets::Evaluator> evs;
    evs.reserve(mats.size());
    for (std::size_t g = 0; g < mats.size(); ++g) {
      std::vector<u64> in(z.begin() + static_cast<std::ptrdiff_t>(g * arity),
                          z.begin() + static_cast<std::ptrdiff_t>((g + 1) * arity));
      evs.emplace_back(fcfg_, std::move(mats[g]), std::move(in));
    }
    gadgets::run_batch(evs, *links_.peer);
    x.clear();
    for (const auto& ev : evs) x.insert(x.end(), ev.output().begin(), ev.output().end());
  }

  ByteWriter w;
  write_field_vector(w, x);
  w.u8(cfg_.trusted_test ? 1 : 0);
  if (cfg_.trusted_test) write_field_vector(w, logits);
  links_.client->send(MsgKind::ShareDelivery, w.bytes());
}

void ServerNode::do_report() {
  NodeReport rep = stats_;
  for (auto* ch : {&links_.client, &links_.peer, &links_.dealer}) rep.traffic.add(**ch);
  for (std::size_t ph = 0; ph < transport::kPhases; ++ph)
    rep.peer[ph] = links_.peer->meter().phase(static_cast<Phase>(ph));
  for (auto& l : links_.tee_seed) rep.traffic.add(*l);
  if (tee_) {
    tee_->add_traffic(rep.traffic);
    tee_->add_stats(rep);
  }
  ByteWriter w;
  rep.write(w);
  send_reply(*links_.client, true, "report", w.bytes());
}

void ServerNode::do_debug() {
  if (!cfg_.trusted_test) {
    send_reply(*links_.client, false, "debug state requires trusted-test mode");
    return;
  }
  ByteWriter w;
  std::uint32_t n = 0;
  for (const auto& st : layers_) n += st.b_share.empty() ? 0 : 1;
  w.u32(n);
  for (const auto& st : layers_) {
    if (st.b_share.empty()) continue;
    write_field_vector(w, st.b_share);
    write_field_vector(w, st.f);
  }
  std::uint64_t ready = 0;
  for (const auto& [id, s] : sessions_) ready += s.consumed ? 0 : 1;
  w.u64(ready);
  links_.client->send(MsgKind::Debug, w.bytes());
  send_reply(*links_.client, true, "debug");
}

// ---------------------------------------------------------------------------
// Dealer

DealerService::DealerService(ProtocolParams params, TeeMode mode, std::array<ChannelPtr, 2> servers,
                             std::array<std::vector<ChannelPtr>, 2> tee_seed, std::uint64_t seed)
    : params_(std::move(params)),
      mode_(mode),
      servers_(std::move(servers)),
      tee_seed_(std::move(tee_seed)),
      ctx_(RingContext::create(params_)),
      rng_(seed, 0x300) {}

void DealerService::add_traffic(transport::TrafficSummary& t) const {
  for (const auto& s : servers_) t.add(*s);
  for (const auto& v : tee_seed_)
    for (const auto& l : v) t.add(*l);
}

void DealerService::serve() {
  const Modulus p(params_.p);
  auto set_phase = [&](Phase ph) {
    for (auto& s : servers_) s->set_phase(ph);
    for (auto& v : tee_seed_)
      for (auto& l : v) l->set_phase(ph);
  };
  for (;;) {
    std::array<Bytes, 2> req;
    for (unsigned b = 0; b < 2; ++b) req[b] = servers_[b]->recv_expect(MsgKind::DealerRequest);
    if (req[0].empty() || req[1].empty() || req[0][0] != req[1][0])
      throw ProtocolAbort("dealer: servers sent different requests");
    const auto op = static_cast<DealerOp>(req[0][0]);
    if (op == DealerOp::Done) return;

    if (op == DealerOp::Setup) {
      set_phase(Phase::Setup);
      keys_ = hss::dealer_setup(ctx_, rng_);
      for (unsigned b = 0; b < 2; ++b) {
        ByteWriter w;
        write_poly(w, keys_->pk.b);
        write_poly(w, keys_->pk.a);
        write_poly(w, keys_->key_share[b]);
        servers_[b]->send(MsgKind::DealerResponse, w.bytes());
      }
      seeds_ = tee::SeedSet::derive(rng_.next_block(), epoch_++);
      for (unsigned b = 0; b < 2; ++b) {
        if (mode_ == TeeMode::Single) {
          std::vector<std::pair<unsigned, Block>> all;
          for (unsigned i = 0; i < tee::kEnclaves; ++i) all.emplace_back(i, seeds_->seeds[i]);
          ByteWriter w;
          write_seed_frame(w, seeds_->epoch, all);
          tee_seed_[b].at(0)->send(MsgKind::SeedDelivery, w.bytes());
        } else {
          for (unsigned i = 0; i < tee::kEnclaves; ++i) {
            std::pair<unsigned, Block> one{i, seeds_->seeds[i]};
            ByteWriter w;
            write_seed_frame(w, seeds_->epoch, {&one, 1});
            tee_seed_[b].at(i)->send(MsgKind::SeedDelivery, w.bytes());
          }
        }
      }
    } else if (op == DealerOp::Convert) {
      set_phase(Phase::ModelLoad);
      if (!keys_) throw ProtocolAbort("dealer: conversion before setup");
      std::array<std::vector<std::vector<std::vector<u64>>>, 2> cols;
      for (unsigned b = 0; b < 2; ++b) {
        ByteReader r(req[b]);
        r.u8();
        const auto G = r.u32();
        cols[b].resize(G);
        for (auto& g : cols[b]) {
          const auto L = r.u32();
          for (std::uint32_t l = 0; l < L; ++l) g.push_back(read_field_vector(r, p));
        }
        r.expect_done();
      }
      if (cols[0].size() != cols[1].size()) throw ProtocolAbort("dealer: conversion shapes differ");
      std::array<ByteWriter, 2> out;
      for (std::size_t g = 0; g < cols[0].size(); ++g) {
        if (cols[0][g].size() != cols[1][g].size()) throw ProtocolAbort("dealer: conversion shapes differ");
        for (std::size_t l = 0; l < cols[0][g].size(); ++l) {
          auto c = hss::dealer_convert_column(ctx_, keys_->key_share, cols[0][g][l], cols[1][g][l], rng_);
          for (unsigned b = 0; b < 2; ++b) hss::write_converted(out[b], c[b]);
        }
      }
      for (unsigned b = 0; b < 2; ++b) servers_[b]->send(MsgKind::DealerResponse, out[b].bytes());
    } else {
      throw FormatError("dealer: unknown request");
    }
  }
}

}  // namespace duet::engine
