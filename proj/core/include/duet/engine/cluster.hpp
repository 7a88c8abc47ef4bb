#pragma once

#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "duet/engine/node.hpp"

namespace duet::engine {

enum class TransportKind : std::uint8_t { InProc = 0, Socket = 1 };
TransportKind parse_transport(const std::string& s);

struct ClusterConfig {
  ProtocolParams params = ProtocolParams::standard_test();
  TeeMode tee = TeeMode::Single;
  TransportKind transport = TransportKind::InProc;
  std::string host = "127.0.0.1";  // socket mode bind/connect host
  bool truncate = true;
  bool trusted_test = true;
  std::uint64_t seed = 1;
};

struct InferResult {
  std::vector<u64> output;
  std::vector<u64> logits;  // trusted-test only
};

// Client, dealer and both servers. In-process mode runs each actor on its
// own thread over queue channels; socket mode forks one process per server
// and connects everything over TCP. The client role (data and model owner)
// runs on the caller's thread.
class Cluster {
 public:
  explicit Cluster(ClusterConfig cfg);
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  const ClusterConfig& config() const { return cfg_; }

  void setup();
  void load_model(const ModelManifest& m);
  void preprocess(std::uint64_t session);
  InferResult infer(std::uint64_t session, std::span<const u64> x);
  // Fresh session: preprocess then infer.
  InferResult run(std::span<const u64> x);

  NodeReport report(unsigned party);
  DebugState debug(unsigned party);
  // Every endpoint's sent counters: both servers, client side and dealer.
  transport::TrafficSummary traffic();
  // Frames sent on endpoints in this process.
  const std::shared_ptr<transport::TranscriptRecorder>& recorder() const { return recorder_; }
  const std::shared_ptr<tee::ViewLog>& view_log() const { return view_log_; }
  // Trusted-test visibility of the enclave seeds, from the in-process dealer.
  std::optional<tee::SeedSet> dealer_seeds() const;

  void shutdown();

 private:
  void start_inproc();
  void start_socket();
  void broadcast(Command c, std::uint64_t arg = 0);
  void await_both();
  void set_client_phase(transport::Phase ph);

  ClusterConfig cfg_;
  std::shared_ptr<transport::TranscriptRecorder> recorder_;
  std::shared_ptr<tee::ViewLog> view_log_;
  std::array<transport::ChannelPtr, 2> client_;
  std::unique_ptr<DealerService> dealer_;
  std::thread dealer_thread_;
  std::string dealer_error_;
  std::array<std::unique_ptr<ServerNode>, 2> servers_;
  std::array<std::thread, 2> server_threads_;
  std::array<int, 2> pids_{-1, -1};
  std::uint64_t next_session_ = 1;
  std::optional<ModelManifest> model_;
  Rng rng_;
  bool stopped_ = false;
};

// Additive sharing of a field vector.
std::array<std::vector<u64>, 2> share_vector(std::span<const u64> x, const Modulus& p, Rng& rng);
std::vector<u64> reconstruct(std::span<const u64> a, std::span<const u64> b, const Modulus& p);

}  // namespace duet::engine
