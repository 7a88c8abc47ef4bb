#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duet/common/bytes.hpp"
#include "duet/ring/modarith.hpp"

namespace duet::transport {

enum class ChannelClass : std::uint8_t {
  WideArea = 0,          // between servers, or server and client/model owner
  LocalIntraServer = 1,  // server process to its own enclaves
  EnclaveEnclave = 2,    // among the enclaves of one server
  IdealDealer = 3,       // to the trusted setup stand-in
};
constexpr std::size_t kChannelClasses = 4;
const char* to_string(ChannelClass c);

enum class MsgKind : std::uint16_t {
  Control = 1,
  MaskedReveal = 2,
  CiphertextExchange = 3,
  ShareDelivery = 4,
  DealerRequest = 5,
  DealerResponse = 6,
  EnclaveShare = 7,
  MaterialDelivery = 8,
  SeedDelivery = 9,
  Debug = 10,
};
const char* to_string(MsgKind k);

enum class Phase : std::uint8_t { Setup = 0, ModelLoad = 1, Preprocess = 2, Online = 3 };
constexpr std::size_t kPhases = 4;
const char* to_string(Phase p);

// 16-byte frame header preceding every payload on the wire.
struct FrameHeader {
  std::uint32_t length = 0;
  std::uint16_t kind = 0;
  std::uint16_t epoch = 0;
  std::uint64_t counter = 0;
};
constexpr std::size_t kFrameHeaderBytes = 16;

Bytes encode_frame(const FrameHeader& h, std::span<const std::uint8_t> payload);
FrameHeader decode_header(std::span<const std::uint8_t> bytes);

struct Frame {
  FrameHeader header;
  Bytes payload;
  MsgKind kind() const { return static_cast<MsgKind>(header.kind); }
};

struct MeterCounters {
  std::uint64_t wire_bytes_sent = 0;
  std::uint64_t payload_bytes_sent = 0;
  std::uint64_t wire_bytes_received = 0;
  std::uint64_t payload_bytes_received = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t rounds = 0;  // flights: a send that follows a receive starts one
  std::uint64_t wait_ns = 0;

  MeterCounters& operator+=(const MeterCounters& o);
};

// Per-endpoint traffic counters, split by phase.
class Meter {
 public:
  void on_send(Phase ph, std::size_t payload);
  void on_receive(Phase ph, std::size_t payload, std::uint64_t wait_ns);
  const MeterCounters& phase(Phase ph) const { return by_phase_[static_cast<std::size_t>(ph)]; }
  MeterCounters total() const;
  void reset();

 private:
  std::array<MeterCounters, kPhases> by_phase_{};
  bool last_was_send_ = false;
};

struct TranscriptEntry {
  std::string channel;
  ChannelClass cls;
  Phase phase;
  FrameHeader header;
  Bytes payload;
};

// Thread-safe log of every frame sent on the attached endpoints.
class TranscriptRecorder {
 public:
  void record(TranscriptEntry e);
  std::vector<TranscriptEntry> entries() const;
  std::vector<TranscriptEntry> entries(Phase ph) const;
  void clear();
  // SHA-256 hex over each channel's frames in send order, channels taken in
  // name order; stable under thread interleaving across channels.
  std::string digest() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

// A bidirectional, ordered, reliable message endpoint.
class Channel {
 public:
  Channel(std::string name, ChannelClass cls) : name_(std::move(name)), cls_(cls) {}
  virtual ~Channel() = default;
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  // Counter defaults to this endpoint's send sequence number.
  void send(MsgKind kind, std::span<const std::uint8_t> payload);
  void send_with_counter(MsgKind kind, std::span<const std::uint8_t> payload, std::uint64_t counter);
  Frame recv();
  // Receives one frame and checks its kind; throws TransportError otherwise.
  Bytes recv_expect(MsgKind kind);

  void send_words(MsgKind kind, std::span<const u64> words);
  std::vector<u64> recv_words(MsgKind kind, std::size_t expected);

  virtual void close() = 0;

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }
  ChannelClass cls() const { return cls_; }
  Meter& meter() { return meter_; }
  const Meter& meter() const { return meter_; }
  void set_phase(Phase ph) { phase_ = ph; }
  Phase phase() const { return phase_; }
  void set_epoch(std::uint16_t e) { epoch_ = e; }
  void attach_recorder(std::shared_ptr<TranscriptRecorder> r) { recorder_ = std::move(r); }

 protected:
  virtual void send_frame(Bytes frame) = 0;
  virtual Bytes recv_frame() = 0;

 private:
  std::string name_;
  ChannelClass cls_;
  Meter meter_;
  Phase phase_ = Phase::Setup;
  std::uint16_t epoch_ = 0;
  std::uint64_t seq_ = 0;
  std::shared_ptr<TranscriptRecorder> recorder_;
};

using ChannelPtr = std::shared_ptr<Channel>;

// Connected in-process endpoints backed by two blocking queues.
std::pair<ChannelPtr, ChannelPtr> make_inproc_pair(const std::string& name_a, const std::string& name_b,
                                                   ChannelClass cls);

// POSIX TCP endpoints. Sends are queued to a writer thread so that two peers
// may both send large messages before reading.
int tcp_listen(std::uint16_t port, const std::string& bind_host = "127.0.0.1");
std::uint16_t tcp_bound_port(int listen_fd);
ChannelPtr tcp_accept(int listen_fd, const std::string& name, ChannelClass cls);
ChannelPtr tcp_connect(const std::string& host, std::uint16_t port, const std::string& name, ChannelClass cls,
                       int retries = 200);
bool is_loopback_host(const std::string& host);

// Aggregate of endpoint meters.
struct TrafficSummary {
  std::array<std::array<MeterCounters, kPhases>, kChannelClasses> sent{};

  void add(const Channel& ch);
  MeterCounters of(ChannelClass c, Phase ph) const {
    return sent[static_cast<std::size_t>(c)][static_cast<std::size_t>(ph)];
  }
  MeterCounters of(ChannelClass c) const;
};

// Cloud price model: egress is charged per GB (10^9 bytes) on wide-area
// traffic only; CPU time per instance-hour.
struct CostModel {
  double egress_usd_per_gb = 0.05;
  double cpu_usd_per_hour = 0.015;
  std::string instance = "m5.4xlarge";

  static double instance_price(const std::string& name);
  static CostModel for_instance(const std::string& name, double egress_usd_per_gb = 0.05);
  double egress_usd(std::uint64_t wide_area_bytes) const;
  double cpu_usd(double seconds) const;
};

}  // namespace duet::transport
