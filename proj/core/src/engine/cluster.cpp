#include "duet/engine/cluster.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <iostream>

#include "duet/common/error.hpp"
#include "duet/ring/poly.hpp"

namespace duet::engine {

using transport::ChannelClass;
using transport::ChannelPtr;
using transport::MsgKind;
using transport::Phase;

TransportKind parse_transport(const std::string& s) {
  if (s == "inproc") return TransportKind::InProc;
  if (s == "socket") return TransportKind::Socket;
  throw ParameterError("unknown transport '" + s + "' (expected inproc or socket)");
}

std::array<std::vector<u64>, 2> share_vector(std::span<const u64> x, const Modulus& p, Rng& rng) {
  std::array<std::vector<u64>, 2> s;
  s[0] = rng.uniform_vec(x.size(), p.value());
  s[1].resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[1][i] = p.sub(p.reduce(x[i]), s[0][i]);
  return s;
}

std::vector<u64> reconstruct(std::span<const u64> a, std::span<const u64> b, const Modulus& p) {
  if (a.size() != b.size()) throw DimensionError("share lengths differ");
  std::vector<u64> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = p.add(a[i], b[i]);
  return out;
}

namespace {

std::size_t seed_links(TeeMode m) { return m == TeeMode::Multi ? tee::kEnclaves : 1; }

// Reads one data frame; an error reply in its place is rethrown.
Bytes recv_data(transport::Channel& ch, MsgKind kind, const std::string& who) {
  auto f = ch.recv();
  if (f.kind() == MsgKind::Control) {
    ByteReader r(f.payload);
    const bool ok = r.u8() == 0;
    const std::string msg = r.str();
    throw ProtocolAbort(who + ": " + (ok ? "unexpected reply: " + msg : msg));
  }
  if (f.kind() != kind) throw TransportError(who + ": unexpected " + std::string(transport::to_string(f.kind())));
  return std::move(f.payload);
}

void send_hello(transport::Channel& ch, unsigned party, unsigned index, std::uint16_t port = 0) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(party));
  w.u8(static_cast<std::uint8_t>(index));
  w.u16(port);
  ch.send(MsgKind::Control, w.bytes());
}

struct Hello {
  unsigned party, index;
  std::uint16_t port;
};

Hello read_hello(transport::Channel& ch) {
  Bytes b = ch.recv_expect(MsgKind::Control);
  ByteReader r(b);
  Hello h{r.u8(), r.u8(), r.u16()};
  r.expect_done();
  if (h.party > 1) throw FormatError("hello: bad party");
  return h;
}

[[noreturn]] void run_server_process(const ClusterConfig& cfg, unsigned b, std::uint16_t client_port,
                                     std::uint16_t dealer_port) {
  int code = 0;
  try {
    const std::string& host = cfg.host;
    int peer_listen = -1;
    std::uint16_t peer_port = 0;
    if (b == 0) {
      peer_listen = transport::tcp_listen(0, host);
      peer_port = transport::tcp_bound_port(peer_listen);
    }
    const std::string me = "s" + std::to_string(b);
    NodeLinks links;
    links.client = transport::tcp_connect(host, client_port, me + "-client", ChannelClass::WideArea);
    send_hello(*links.client, b, 0, peer_port);
    links.dealer = transport::tcp_connect(host, dealer_port, me + "-dealer", ChannelClass::IdealDealer);
    send_hello(*links.dealer, b, 0);
    for (unsigned i = 0; i < seed_links(cfg.tee); ++i) {
      auto l = transport::tcp_connect(host, dealer_port, me + ".tee" + std::to_string(i) + "-dealer",
                                      ChannelClass::IdealDealer);
      send_hello(*l, b, i + 1);
      links.tee_seed.push_back(std::move(l));
    }
    if (b == 0) {
      links.peer = transport::tcp_accept(peer_listen, "s0-s1", ChannelClass::WideArea);
      ::close(peer_listen);
    } else {
      Bytes pb = links.client->recv_expect(MsgKind::Control);
      ByteReader r(pb);
      const auto port = r.u16();
      links.peer = transport::tcp_connect(host, port, "s1-s0", ChannelClass::WideArea);
    }
    NodeConfig nc{b, cfg.params, cfg.tee, cfg.truncate, cfg.trusted_test, cfg.seed};
    ServerNode node(nc, std::move(links));
    node.serve();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "server %u: %s\n", b, e.what());
    code = 1;
  }
  std::fflush(stderr);
  std::_Exit(code);
}

}  // namespace

Cluster::Cluster(ClusterConfig cfg)
    : cfg_(std::move(cfg)),
      recorder_(std::make_shared<transport::TranscriptRecorder>()),
      view_log_(std::make_shared<tee::ViewLog>()),
      rng_(cfg_.seed, 0x400) {
  cfg_.params.validate();
  if (cfg_.transport == TransportKind::Socket) {
    if (cfg_.trusted_test && !transport::is_loopback_host(cfg_.host))
      throw ParameterError("trusted-test mode is refused on non-loopback host " + cfg_.host);
    start_socket();
  } else {
    start_inproc();
  }
}

void Cluster::start_inproc() {
  std::array<NodeLinks, 2> links;
  std::array<ChannelPtr, 2> dealer_side;
  std::array<std::vector<ChannelPtr>, 2> dealer_tee;
  std::vector<ChannelPtr> all;
  for (unsigned b = 0; b < 2; ++b) {
    const std::string s = "s" + std::to_string(b);
    auto [c, sc] = transport::make_inproc_pair("client-" + s, s + "-client", ChannelClass::WideArea);
    client_[b] = c;
    links[b].client = sc;
    auto [sd, ds] = transport::make_inproc_pair(s + "-dealer", "dealer-" + s, ChannelClass::IdealDealer);
    links[b].dealer = sd;
    dealer_side[b] = ds;
    for (unsigned i = 0; i < seed_links(cfg_.tee); ++i) {
      const std::string t = s + ".tee" + std::to_string(i);
      auto [te, de] = transport::make_inproc_pair(t + "-dealer", "dealer-" + t, ChannelClass::IdealDealer);
      links[b].tee_seed.push_back(te);
      dealer_tee[b].push_back(de);
      all.push_back(te);
      all.push_back(de);
    }
    for (auto& ch : {c, sc, sd, ds}) all.push_back(ch);
  }
  auto [p01, p10] = transport::make_inproc_pair("s0-s1", "s1-s0", ChannelClass::WideArea);
  links[0].peer = p01;
  links[1].peer = p10;
  all.push_back(p01);
  all.push_back(p10);
  for (auto& ch : all) ch->attach_recorder(recorder_);

  dealer_ = std::make_unique<DealerService>(cfg_.params, cfg_.tee, dealer_side, dealer_tee, cfg_.seed);
  dealer_thread_ = std::thread([this] {
    try {
      dealer_->serve();
    } catch (const std::exception& e) {
      dealer_error_ = e.what();
    }
  });
  for (unsigned b = 0; b < 2; ++b) {
    NodeConfig nc{b, cfg_.params, cfg_.tee, cfg_.truncate, cfg_.trusted_test, cfg_.seed};
    servers_[b] = std::make_unique<ServerNode>(nc, std::move(links[b]), view_log_);
    server_threads_[b] = std::thread([this, b] {
      try {
        servers_[b]->serve();
      } catch (const std::exception&) {
        // Reported to the client as an error reply.
      }
    });
  }
}

void Cluster::start_socket() {
  // Fork before any channel (and its writer thread) exists.
  const int client_listen = transport::tcp_listen(0, cfg_.host);
  const int dealer_listen = transport::tcp_listen(0, cfg_.host);
  const auto client_port = transport::tcp_bound_port(client_listen);
  const auto dealer_port = transport::tcp_bound_port(dealer_listen);
  std::fflush(stdout);
  std::fflush(stderr);
  for (unsigned b = 0; b < 2; ++b) {
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      ::close(client_listen);
      ::close(dealer_listen);
      run_server_process(cfg_, b, client_port, dealer_port);
    }
    pids_[b] = pid;
  }

  std::uint16_t peer_port = 0;
  for (unsigned k = 0; k < 2; ++k) {
    auto ch = transport::tcp_accept(client_listen, "client-pending", ChannelClass::WideArea);
    auto h = read_hello(*ch);
    ch->set_name("client-s" + std::to_string(h.party));
    if (h.party == 0) peer_port = h.port;
    client_[h.party] = std::move(ch);
  }
  ::close(client_listen);
  {
    ByteWriter w;
    w.u16(peer_port);
    client_[1]->send(MsgKind::Control, w.bytes());
  }

  std::array<ChannelPtr, 2> dealer_side;
  std::array<std::vector<ChannelPtr>, 2> dealer_tee;
  const std::size_t k = seed_links(cfg_.tee);
  for (auto& v : dealer_tee) v.resize(k);
  for (std::size_t n = 0; n < 2 * (1 + k); ++n) {
    auto ch = transport::tcp_accept(dealer_listen, "dealer-pending", ChannelClass::IdealDealer);
    auto h = read_hello(*ch);
    const std::string s = "s" + std::to_string(h.party);
    if (h.index == 0) {
      ch->set_name("dealer-" + s);
      dealer_side[h.party] = std::move(ch);
    } else {
      if (h.index > k) throw FormatError("hello: bad enclave index");
      ch->set_name("dealer-" + s + ".tee" + std::to_string(h.index - 1));
      dealer_tee[h.party][h.index - 1] = std::move(ch);
    }
  }
  ::close(dealer_listen);
  for (auto& c : client_) c->attach_recorder(recorder_);
  for (auto& c : dealer_side) c->attach_recorder(recorder_);
  for (auto& v : dealer_tee)
    for (auto& c : v) c->attach_recorder(recorder_);

  dealer_ = std::make_unique<DealerService>(cfg_.params, cfg_.tee, dealer_side, dealer_tee, cfg_.seed);
  dealer_thread_ = std::thread([this] {
    try {
      dealer_->serve();
    } catch (const std::exception& e) {
      dealer_error_ = e.what();
    }
  });
}

Cluster::~Cluster() {
  try {
    shutdown();
  } catch (const std::exception& e) {
    std::cerr << "cluster shutdown: " << e.what() << "\n";
  }
}

void Cluster::set_client_phase(Phase ph) {
  for (auto& c : client_) c->set_phase(ph);
}

void Cluster::broadcast(Command c, std::uint64_t arg) {
  if (stopped_) throw ProtocolAbort("cluster is stopped");
  for (auto& ch : client_) send_command(*ch, c, arg);
}

void Cluster::await_both() {
  std::string first;
  for (unsigned b = 0; b < 2; ++b) {
    try {
      expect_reply(*client_[b], "server " + std::to_string(b));
    } catch (const std::exception& e) {
      if (first.empty()) first = e.what();
    }
  }
  if (!first.empty()) {
    stopped_ = true;
    throw ProtocolAbort(first);
  }
}

void Cluster::setup() {
  set_client_phase(Phase::Setup);
  broadcast(Command::Setup);
  await_both();
}

void Cluster::load_model(const ModelManifest& m) {
  m.validate();
  if (m.p != cfg_.params.p) throw ParameterError("model modulus differs from the protocol modulus");
  set_client_phase(Phase::ModelLoad);
  const Modulus p(m.p);
  std::array<ModelManifest, 2> shares{m, m};
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    auto w = share_vector(m.layers[i].weights, p, rng_);
    auto bias = share_vector(m.layers[i].bias, p, rng_);
    for (unsigned b = 0; b < 2; ++b) {
      shares[b].layers[i].weights = std::move(w[b]);
      shares[b].layers[i].bias = std::move(bias[b]);
    }
  }
  broadcast(Command::LoadModel);
  for (unsigned b = 0; b < 2; ++b) client_[b]->send(MsgKind::ShareDelivery, shares[b].serialize());
  await_both();
  model_ = m;
}

void Cluster::preprocess(std::uint64_t session) {
  set_client_phase(Phase::Preprocess);
  broadcast(Command::Preprocess, session);
  await_both();
}

InferResult Cluster::infer(std::uint64_t session, std::span<const u64> x) {
  if (!model_) throw ProtocolAbort("inference before model load");
  if (x.size() != model_->input_dim) throw DimensionError("input length does not match the model");
  set_client_phase(Phase::Online);
  const Modulus p(model_->p);
  auto xs = share_vector(x, p, rng_);
  broadcast(Command::Infer, session);
  for (unsigned b = 0; b < 2; ++b) client_[b]->send_words(MsgKind::ShareDelivery, xs[b]);
  std::array<std::vector<u64>, 2> out, logits;
  std::string first;
  for (unsigned b = 0; b < 2; ++b) {
    try {
      Bytes d = recv_data(*client_[b], MsgKind::ShareDelivery, "server " + std::to_string(b));
      ByteReader r(d);
      out[b] = read_field_vector(r, p);
      if (r.u8()) logits[b] = read_field_vector(r, p);
      r.expect_done();
    } catch (const ProtocolAbort& e) {
      // The error reply replaced the data frame.
      if (first.empty()) first = e.what();
      stopped_ = true;
      continue;
    }
  }
  if (!first.empty()) {
    for (unsigned b = 0; b < 2; ++b) client_[b]->close();
    throw ProtocolAbort(first);
  }
  await_both();
  InferResult res;
  res.output = reconstruct(out[0], out[1], p);
  if (!logits[0].empty()) res.logits = reconstruct(logits[0], logits[1], p);
  return res;
}

InferResult Cluster::run(std::span<const u64> x) {
  const auto s = next_session_++;
  preprocess(s);
  return infer(s, x);
}

NodeReport Cluster::report(unsigned party) {
  if (stopped_) throw ProtocolAbort("cluster is stopped");
  send_command(*client_.at(party), Command::Report);
  Bytes body = expect_reply(*client_[party], "server " + std::to_string(party));
  ByteReader r(body);
  auto rep = NodeReport::read(r);
  r.expect_done();
  return rep;
}

DebugState Cluster::debug(unsigned party) {
  if (stopped_) throw ProtocolAbort("cluster is stopped");
  send_command(*client_.at(party), Command::Debug);
  const std::string who = "server " + std::to_string(party);
  Bytes d = recv_data(*client_[party], MsgKind::Debug, who);
  expect_reply(*client_[party], who);
  const Modulus p(cfg_.params.p);
  ByteReader r(d);
  DebugState st;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    st.b_share.push_back(read_field_vector(r, p));
    st.f.push_back(read_field_vector(r, p));
  }
  st.sessions_ready = r.u64();
  r.expect_done();
  return st;
}

transport::TrafficSummary Cluster::traffic() {
  transport::TrafficSummary t;
  for (unsigned b = 0; b < 2; ++b) {
    const auto rep = report(b);
    for (std::size_t c = 0; c < transport::kChannelClasses; ++c)
      for (std::size_t ph = 0; ph < transport::kPhases; ++ph) t.sent[c][ph] += rep.traffic.sent[c][ph];
  }
  for (auto& c : client_) t.add(*c);
  if (dealer_) dealer_->add_traffic(t);
  return t;
}

std::optional<tee::SeedSet> Cluster::dealer_seeds() const {
  if (!dealer_) return std::nullopt;
  return dealer_->seeds();
}

void Cluster::shutdown() {
  std::string err;
  if (!stopped_) {
    stopped_ = true;
    try {
      for (auto& ch : client_) send_command(*ch, Command::Shutdown);
      for (unsigned b = 0; b < 2; ++b) expect_reply(*client_[b], "server " + std::to_string(b));
    } catch (const std::exception& e) {
      err = e.what();
    }
  }
  for (auto& ch : client_)
    if (ch) ch->close();
  for (auto& t : server_threads_)
    if (t.joinable()) t.join();
  for (auto& pid : pids_) {
    if (pid > 0) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      if (err.empty() && (!WIFEXITED(status) || WEXITSTATUS(status) != 0)) err = "server process exited abnormally";
      pid = -1;
    }
  }
  if (dealer_thread_.joinable()) dealer_thread_.join();
  if (!err.empty()) throw ProtocolAbort(err);
}

}  // namespace duet::engine
