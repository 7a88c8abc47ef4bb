#include <gtest/gtest.h>

#include <unistd.h>

#include <thread>

#include "duet/common/error.hpp"
#include "duet/transport/channel.hpp"

using namespace duet;
using namespace duet::transport;

TEST(Frame, HeaderRoundTrip) {
  FrameHeader h{5, 3, 7, 0x0102030405060708ULL};
  Bytes payload = {1, 2, 3, 4, 5};
  Bytes f = encode_frame(h, payload);
  ASSERT_EQ(f.size(), kFrameHeaderBytes + 5);
  auto d = decode_header(f);
  EXPECT_EQ(d.length, 5u);
  EXPECT_EQ(d.kind, 3u);
  EXPECT_EQ(d.epoch, 7u);
  EXPECT_EQ(d.counter, 0x0102030405060708ULL);
}

TEST(InProc, OrderedDeliveryAndMeterConservation) {
  auto [a, b] = make_inproc_pair("a", "b", ChannelClass::WideArea);
  a->set_phase(Phase::Online);
  b->set_phase(Phase::Online);
  std::thread t([&, b = b] {
    for (int i = 0; i < 100; ++i) {
      auto w = b->recv_words(MsgKind::MaskedReveal, 3);
      EXPECT_EQ(w[0], static_cast<u64>(i));
      b->send_words(MsgKind::MaskedReveal, w);
    }
  });
  for (int i = 0; i < 100; ++i) {
    std::vector<u64> w = {static_cast<u64>(i), 2, 3};
    a->send_words(MsgKind::MaskedReveal, w);
    EXPECT_EQ(a->recv_words(MsgKind::MaskedReveal, 3), w);
  }
  t.join();
  auto sa = a->meter().phase(Phase::Online), sb = b->meter().phase(Phase::Online);
  EXPECT_EQ(sa.wire_bytes_sent, sb.wire_bytes_received);
  EXPECT_EQ(sb.wire_bytes_sent, sa.wire_bytes_received);
  EXPECT_EQ(sa.payload_bytes_sent, 100u * 24);
  EXPECT_EQ(sa.wire_bytes_sent, 100u * (24 + kFrameHeaderBytes));
  EXPECT_EQ(sa.messages_sent, 100u);
  EXPECT_EQ(sa.rounds, 100u);
  EXPECT_EQ(a->meter().phase(Phase::Setup).messages_sent, 0u);
}

TEST(InProc, KindMismatchAndDisconnect) {
  auto [a, b] = make_inproc_pair("a", "b", ChannelClass::LocalIntraServer);
  a->send(MsgKind::Control, Bytes{});
  EXPECT_THROW(b->recv_expect(MsgKind::ShareDelivery), TransportError);
  a->close();
  EXPECT_THROW(b->recv(), TransportError);
}

TEST(Recorder, CapturesSentFramesByPhase) {
  auto rec = std::make_shared<TranscriptRecorder>();
  auto [a, b] = make_inproc_pair("a", "b", ChannelClass::WideArea);
  a->attach_recorder(rec);
  a->set_phase(Phase::Preprocess);
  a->send(MsgKind::CiphertextExchange, Bytes{9, 9});
  a->set_phase(Phase::Online);
  a->send(MsgKind::MaskedReveal, Bytes{1});
  EXPECT_EQ(rec->entries().size(), 2u);
  ASSERT_EQ(rec->entries(Phase::Preprocess).size(), 1u);
  EXPECT_EQ(rec->entries(Phase::Preprocess)[0].payload, (Bytes{9, 9}));
}

TEST(Tcp, LoopbackExchangeOfLargeMessages) {
  int lfd = tcp_listen(0);
  std::uint16_t port = tcp_bound_port(lfd);
  ChannelPtr server;
  std::thread t([&] { server = tcp_accept(lfd, "srv", ChannelClass::WideArea); });
  auto client = tcp_connect("127.0.0.1", port, "cli", ChannelClass::WideArea);
  t.join();
  std::vector<u64> big(1 << 18);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = i * 7;
  // Both ends send before receiving; must not deadlock.
  std::thread ts([&] {
    server->send_words(MsgKind::CiphertextExchange, big);
    EXPECT_EQ(server->recv_words(MsgKind::CiphertextExchange, big.size()), big);
  });
  client->send_words(MsgKind::CiphertextExchange, big);
  EXPECT_EQ(client->recv_words(MsgKind::CiphertextExchange, big.size()), big);
  ts.join();
  EXPECT_EQ(client->meter().total().wire_bytes_sent, server->meter().total().wire_bytes_received);
  client.reset();
  server.reset();
  ::close(lfd);
}

TEST(Tcp, LoopbackDetection) {
  EXPECT_TRUE(is_loopback_host("127.0.0.1"));
  EXPECT_TRUE(is_loopback_host("localhost"));
  EXPECT_FALSE(is_loopback_host("10.0.0.1"));
}

TEST(Cost, EgressAndCpuPrices) {
  CostModel m;
  EXPECT_DOUBLE_EQ(m.egress_usd(2'000'000'000ULL), 0.10);
  auto hi = CostModel::for_instance("DC1s-v2", 0.5);
  EXPECT_DOUBLE_EQ(hi.egress_usd(1'000'000'000ULL), 0.5);
  EXPECT_DOUBLE_EQ(hi.cpu_usd(3600), 0.079);
  EXPECT_THROW(CostModel::instance_price("nope"), ParameterError);
}
