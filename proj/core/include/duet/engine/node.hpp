#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "duet/engine/model.hpp"
#include "duet/gadgets/eval.hpp"
#include "duet/hss/triples.hpp"
#include "duet/ring/params.hpp"
#include "duet/tee/enclave.hpp"
#include "duet/transport/channel.hpp"

namespace duet::engine {

enum class TeeMode : std::uint8_t { Single = 1, Multi = 3 };
const char* to_string(TeeMode m);
TeeMode parse_tee_mode(const std::string& s);

// Client-to-server commands, carried as Control frames.
enum class Command : std::uint8_t {
  Setup = 1,
  LoadModel = 2,
  Preprocess = 3,
  Infer = 4,
  Report = 5,
  Debug = 6,  // trusted-test only
  Shutdown = 7,
};

// Server-to-dealer requests.
enum class DealerOp : std::uint8_t { Setup = 1, Convert = 2, Done = 3 };

struct NodeConfig {
  unsigned party = 0;
  ProtocolParams params;
  TeeMode tee = TeeMode::Single;
  bool truncate = true;
  bool trusted_test = false;
  std::uint64_t seed = 1;
};

struct NodeLinks {
  transport::ChannelPtr client;               // wide-area, to the data and model owner
  transport::ChannelPtr peer;                 // wide-area, to the other server
  transport::ChannelPtr dealer;               // to the setup stand-in
  std::vector<transport::ChannelPtr> tee_seed;  // dealer to enclaves: 1 or 3 links
};

// Per-server counters returned by the Report command.
struct NodeReport {
  transport::TrafficSummary traffic;
  std::array<transport::MeterCounters, transport::kPhases> peer{};  // server-to-server link only
  std::array<double, transport::kPhases> seconds{};
  std::uint64_t triple_ciphertexts = 0;
  std::uint64_t triple_mults = 0;
  std::uint64_t materials = 0;
  std::uint64_t material_bytes = 0;
  std::uint64_t tee_node_expansions = 0;
  std::uint64_t tee_and_gates = 0;
  std::uint64_t tee_rounds = 0;

  void write(ByteWriter& w) const;
  static NodeReport read(ByteReader& r);
};

// Trusted-test view of one server's model state.
struct DebugState {
  std::vector<std::vector<u64>> b_share;  // per triple layer, n x m
  std::vector<std::vector<u64>> f;        // public Y - B
  std::uint64_t sessions_ready = 0;
};

// Source of gadget material for one server.
class TeeService {
 public:
  virtual ~TeeService() = default;
  virtual std::vector<gadgets::Material> generate(const std::vector<gadgets::Recipe>& recipes) = 0;
  virtual void set_phase(transport::Phase ph) = 0;
  virtual void add_traffic(transport::TrafficSummary& t) const = 0;
  virtual void add_stats(NodeReport& r) const = 0;
};

// Reads this server's seeds from the dealer links and starts the enclaves.
std::unique_ptr<TeeService> provision_tee(TeeMode mode, unsigned party, std::span<transport::ChannelPtr> seed_links,
                                          const gadgets::FieldConfig& cfg,
                                          std::shared_ptr<tee::ViewLog> log = nullptr);

// One computing server. serve() executes client commands until Shutdown.
class ServerNode {
 public:
  ServerNode(NodeConfig cfg, NodeLinks links, std::shared_ptr<tee::ViewLog> log = nullptr);
  ~ServerNode();
  ServerNode(const ServerNode&) = delete;
  ServerNode& operator=(const ServerNode&) = delete;

  // Returns normally on Shutdown. On failure sends an error reply, closes
  // every link and rethrows.
  void serve();

 private:
  struct LayerState {
    std::size_t job = 0;               // triple job index, if uses_triple
    std::vector<u64> b_share, f, bias_share;
    std::vector<u64> public_map;       // avgpool averaging matrix
    std::vector<gadgets::Recipe> recipes;
  };
  struct Session {
    std::vector<hss::TripleShare> triples;
    std::vector<std::vector<gadgets::Material>> materials;  // per layer
    bool consumed = false;
  };

  void set_phase(transport::Phase ph);
  void do_setup();
  void do_load_model();
  void do_preprocess(std::uint64_t session);
  void do_infer(std::uint64_t session);
  void do_report();
  void do_debug();
  void shutdown_links();
  void account(transport::Phase ph, double seconds);

  NodeConfig cfg_;
  NodeLinks links_;
  std::shared_ptr<tee::ViewLog> log_;
  RingContextPtr ctx_;
  Modulus p_;
  gadgets::FieldConfig fcfg_;
  Rng rng_;

  std::optional<hss::PublicKey> pk_;
  std::optional<RingPoly> key_share_;
  std::unique_ptr<TeeService> tee_;

  std::optional<ModelManifest> model_;
  std::vector<LayerState> layers_;
  hss::PackPlan plan_;
  hss::ConvertedPlan converted_;
  std::map<std::uint64_t, Session> sessions_;
  NodeReport stats_;
};

// Trusted setup stand-in: key generation, enclave seeds and B-column
// conversion. serve() answers both servers in lockstep until Done.
class DealerService {
 public:
  DealerService(ProtocolParams params, TeeMode mode, std::array<transport::ChannelPtr, 2> servers,
                std::array<std::vector<transport::ChannelPtr>, 2> tee_seed, std::uint64_t seed);
  void serve();
  void add_traffic(transport::TrafficSummary& t) const;
  // Trusted-test visibility of the distributed enclave seeds.
  const std::optional<tee::SeedSet>& seeds() const { return seeds_; }

 private:
  ProtocolParams params_;
  TeeMode mode_;
  std::array<transport::ChannelPtr, 2> servers_;
  std::array<std::vector<transport::ChannelPtr>, 2> tee_seed_;
  RingContextPtr ctx_;
  Rng rng_;
  std::optional<hss::DealerKeys> keys_;
  std::optional<tee::SeedSet> seeds_;
  std::uint16_t epoch_ = 0;
};

// Control frame helpers shared with the client side.
void send_command(transport::Channel& ch, Command c, std::uint64_t arg = 0);
void send_reply(transport::Channel& ch, bool ok, const std::string& message, std::span<const std::uint8_t> body = {});
// Throws ProtocolAbort carrying the server's message on an error reply.
Bytes expect_reply(transport::Channel& ch, const std::string& who);

}  // namespace duet::engine
