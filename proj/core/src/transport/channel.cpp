#include "duet/transport/channel.hpp"

#include <openssl/evp.h>

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <map>

#include "duet/common/error.hpp"

namespace duet::transport {

const char* to_string(ChannelClass c) {
  switch (c) {
    case ChannelClass::WideArea: return "wide_area";
    case ChannelClass::LocalIntraServer: return "local_intra_server";
    case ChannelClass::EnclaveEnclave: return "enclave_enclave";
    case ChannelClass::IdealDealer: return "ideal_dealer";
  }
  return "unknown";
}

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::Control: return "control";
    case MsgKind::MaskedReveal: return "masked_reveal";
    case MsgKind::CiphertextExchange: return "ciphertext_exchange";
    case MsgKind::ShareDelivery: return "share_delivery";
    case MsgKind::DealerRequest: return "dealer_request";
    case MsgKind::DealerResponse: return "dealer_response";
    case MsgKind::EnclaveShare: return "enclave_share";
    case MsgKind::MaterialDelivery: return "material_delivery";
    case MsgKind::SeedDelivery: return "seed_delivery";
    case MsgKind::Debug: return "debug";
  }
  return "unknown";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Setup: return "setup";
    case Phase::ModelLoad: return "model_load";
    case Phase::Preprocess: return "preprocess";
    case Phase::Online: return "online";
  }
  return "unknown";
}

Bytes encode_frame(const FrameHeader& h, std::span<const std::uint8_t> payload) {
  ByteWriter w(kFrameHeaderBytes + payload.size());
  w.u32(h.length);
  w.u16(h.kind);
  w.u16(h.epoch);
  w.u64(h.counter);
  w.raw(payload);
  return std::move(w).take();
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes.first(std::min(bytes.size(), kFrameHeaderBytes)));
  FrameHeader h;
  h.length = r.u32();
  h.kind = r.u16();
  h.epoch = r.u16();
  h.counter = r.u64();
  return h;
}

MeterCounters& MeterCounters::operator+=(const MeterCounters& o) {
  wire_bytes_sent += o.wire_bytes_sent;
  payload_bytes_sent += o.payload_bytes_sent;
  wire_bytes_received += o.wire_bytes_received;
  payload_bytes_received += o.payload_bytes_received;
  messages_sent += o.messages_sent;
  messages_received += o.messages_received;
  rounds += o.rounds;
  wait_ns += o.wait_ns;
  return *this;
}

void Meter::on_send(Phase ph, std::size_t payload) {
  auto& c = by_phase_[static_cast<std::size_t>(ph)];
  c.payload_bytes_sent += payload;
  c.wire_bytes_sent += payload + kFrameHeaderBytes;
  c.messages_sent += 1;
  if (!last_was_send_) c.rounds += 1;
  last_was_send_ = true;
}

void Meter::on_receive(Phase ph, std::size_t payload, std::uint64_t wait_ns) {
  auto& c = by_phase_[static_cast<std::size_t>(ph)];
  c.payload_bytes_received += payload;
  c.wire_bytes_received += payload + kFrameHeaderBytes;
  c.messages_received += 1;
  c.wait_ns += wait_ns;
  last_was_send_ = false;
}

MeterCounters Meter::total() const {
  MeterCounters t;
  for (const auto& c : by_phase_) t += c;
  return t;
}

void Meter::reset() {
  by_phase_ = {};
  last_was_send_ = false;
}

void TranscriptRecorder::record(TranscriptEntry e) {
  std::lock_guard<std::mutex> lk(mu_);
  entries_.push_back(std::move(e));
}

std::vector<TranscriptEntry> TranscriptRecorder::entries() const {
  std::lock_guard<std::mutex> lk(mu_);
  return entries_;
}

std::vector<TranscriptEntry> TranscriptRecorder::entries(Phase ph) const {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<TranscriptEntry> r;
  for (const auto& e : entries_) {
    if (e.phase == ph) r.push_back(e);
  }
  return r;
}

std::string TranscriptRecorder::digest() const {
  std::map<std::string, std::vector<const TranscriptEntry*>> by_channel;
  std::lock_guard<std::mutex> lk(mu_);
  for (const auto& e : entries_) by_channel[e.channel].push_back(&e);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& [name, list] : by_channel) {
    EVP_DigestUpdate(ctx, name.data(), name.size() + 1);
    for (const auto* e : list) {
      Bytes f = encode_frame(e->header, e->payload);
      const std::uint8_t ph = static_cast<std::uint8_t>(e->phase);
      EVP_DigestUpdate(ctx, &ph, 1);
      EVP_DigestUpdate(ctx, f.data(), f.size());
    }
  }
  unsigned char md[32];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void TranscriptRecorder::clear() {
  std::lock_guard<std::mutex> lk(mu_);
  entries_.clear();
}

void Channel::send(MsgKind kind, std::span<const std::uint8_t> payload) {
  send_with_counter(kind, payload, seq_);
}

void Channel::send_with_counter(MsgKind kind, std::span<const std::uint8_t> payload, std::uint64_t counter) {
  if (payload.size() > 0xffffffffULL) throw TransportError("payload too large for one frame");
  FrameHeader h;
  h.length = static_cast<std::uint32_t>(payload.size());
  h.kind = static_cast<std::uint16_t>(kind);
  h.epoch = epoch_;
  h.counter = counter;
  ++seq_;
  meter_.on_send(phase_, payload.size());
  if (recorder_) recorder_->record({name_, cls_, phase_, h, Bytes(payload.begin(), payload.end())});
  send_frame(encode_frame(h, payload));
}

Frame Channel::recv() {
  auto start = std::chrono::steady_clock::now();
  Bytes raw = recv_frame();
  auto waited = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
  if (raw.size() < kFrameHeaderBytes) throw TransportError("short frame on " + name_);
  Frame f;
  f.header = decode_header(raw);
  if (f.header.length != raw.size() - kFrameHeaderBytes) throw TransportError("frame length mismatch on " + name_);
  f.payload.assign(raw.begin() + kFrameHeaderBytes, raw.end());
  meter_.on_receive(phase_, f.payload.size(), static_cast<std::uint64_t>(waited.count()));
  return f;
}

Bytes Channel::recv_expect(MsgKind kind) {
  Frame f = recv();
  if (f.kind() != kind) {
    throw TransportError(std::string("unexpected message kind on ") + name_ + ": got " + to_string(f.kind()) +
                         ", want " + to_string(kind));
  }
  return std::move(f.payload);
}

void Channel::send_words(MsgKind kind, std::span<const u64> words) {
  ByteWriter w(words.size() * 8);
  w.u64s(words);
  send(kind, w.bytes());
}

std::vector<u64> Channel::recv_words(MsgKind kind, std::size_t expected) {
  Bytes b = recv_expect(kind);
  if (b.size() != expected * 8) throw TransportError("unexpected word count on " + name_);
  ByteReader r(b);
  return r.u64s(expected);
}

namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> items;
  bool closed = false;
};

class InProcChannel final : public Channel {
 public:
  InProcChannel(std::string name, ChannelClass cls, std::shared_ptr<Queue> out, std::shared_ptr<Queue> in)
      : Channel(std::move(name), cls), out_(std::move(out)), in_(std::move(in)) {}
  ~InProcChannel() override { close(); }

  void close() override {
    for (auto* q : {out_.get(), in_.get()}) {
      std::lock_guard<std::mutex> lk(q->mu);
      q->closed = true;
      q->cv.notify_all();
    }
  }

 protected:
  void send_frame(Bytes frame) override {
    std::lock_guard<std::mutex> lk(out_->mu);
    if (out_->closed) throw TransportError("send on closed channel " + name());
    out_->items.push_back(std::move(frame));
    out_->cv.notify_one();
  }

  Bytes recv_frame() override {
    std::unique_lock<std::mutex> lk(in_->mu);
    in_->cv.wait(lk, [&] { return !in_->items.empty() || in_->closed; });
    if (in_->items.empty()) throw TransportError("peer disconnected on " + name());
    Bytes b = std::move(in_->items.front());
    in_->items.pop_front();
    return b;
  }

 private:
  std::shared_ptr<Queue> out_, in_;
};

}  // namespace

std::pair<ChannelPtr, ChannelPtr> make_inproc_pair(const std::string& name_a, const std::string& name_b,
                                                   ChannelClass cls) {
  auto ab = std::make_shared<Queue>();
  auto ba = std::make_shared<Queue>();
  return {std::make_shared<InProcChannel>(name_a, cls, ab, ba), std::make_shared<InProcChannel>(name_b, cls, ba, ab)};
}

void TrafficSummary::add(const Channel& ch) {
  for (std::size_t ph = 0; ph < kPhases; ++ph) {
    sent[static_cast<std::size_t>(ch.cls())][ph] += ch.meter().phase(static_cast<Phase>(ph));
  }
}

MeterCounters TrafficSummary::of(ChannelClass c) const {
  MeterCounters t;
  for (const auto& m : sent[static_cast<std::size_t>(c)]) t += m;
  return t;
}

double CostModel::instance_price(const std::string& name) {
  if (name == "m5.4xlarge") return 0.015;
  if (name == "D16s-v3") return 0.017;
  if (name == "L8s-v2") return 0.022;
  if (name == "DC1s-v2") return 0.079;
  throw ParameterError("unknown instance type " + name);
}

CostModel CostModel::for_instance(const std::string& name, double egress_usd_per_gb) {
  CostModel m;
  m.instance = name;
  m.cpu_usd_per_hour = instance_price(name);
  m.egress_usd_per_gb = egress_usd_per_gb;
  return m;
}

double CostModel::egress_usd(std::uint64_t wide_area_bytes) const {
  return static_cast<double>(wide_area_bytes) / 1e9 * egress_usd_per_gb;
}

double CostModel::cpu_usd(double seconds) const { return seconds / 3600.0 * cpu_usd_per_hour; }

}  // namespace duet::transport
