#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <thread>

#include "duet/common/error.hpp"
#include "duet/transport/channel.hpp"

namespace duet::transport {

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    ssize_t k = ::send(fd, data, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("socket write failed: ") + std::strerror(errno));
    }
    data += k;
    n -= static_cast<std::size_t>(k);
  }
}

bool read_all(int fd, std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    ssize_t k = ::recv(fd, data, n, 0);
    if (k == 0) return false;
    if (k < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("socket read failed: ") + std::strerror(errno));
    }
    data += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

class TcpChannel final : public Channel {
 public:
  TcpChannel(int fd, std::string name, ChannelClass cls) : Channel(std::move(name), cls), fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    writer_ = std::thread([this] { writer_loop(); });
  }

  ~TcpChannel() override {
    close();
    if (writer_.joinable()) writer_.join();
    ::close(fd_);
  }

  void close() override {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (closing_) return;
      closing_ = true;
      cv_.notify_all();
    }
  }

 protected:
  void send_frame(Bytes frame) override {
    std::lock_guard<std::mutex> lk(mu_);
    if (closing_ || failed_) throw TransportError("send on closed channel " + name());
    pending_.push_back(std::move(frame));
    cv_.notify_all();
  }

  Bytes recv_frame() override {
    std::uint8_t hdr[kFrameHeaderBytes];
    if (!read_all(fd_, hdr, sizeof(hdr))) throw TransportError("peer disconnected on " + name());
    FrameHeader h = decode_header(hdr);
    Bytes b(kFrameHeaderBytes + h.length);
    std::memcpy(b.data(), hdr, kFrameHeaderBytes);
    if (h.length && !read_all(fd_, b.data() + kFrameHeaderBytes, h.length)) {
      throw TransportError("peer disconnected mid-frame on " + name());
    }
    return b;
  }

 private:
  void writer_loop() {
    for (;;) {
      Bytes frame;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return !pending_.empty() || closing_; });
        if (pending_.empty()) break;
        frame = std::move(pending_.front());
        pending_.pop_front();
      }
      try {
        write_all(fd_, frame.data(), frame.size());
      } catch (const TransportError&) {
        std::lock_guard<std::mutex> lk(mu_);
        failed_ = true;
        pending_.clear();
        break;
      }
    }
    ::shutdown(fd_, SHUT_WR);
  }

  int fd_;
  std::thread writer_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> pending_;
  bool closing_ = false;
  bool failed_ = false;
};

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw TransportError("cannot resolve host " + host);
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

int tcp_listen(std::uint16_t port, const std::string& bind_host) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(bind_host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError(std::string("bind failed: ") + std::strerror(errno));
  }
  if (::listen(fd, 16) != 0) {
    ::close(fd);
    throw TransportError("listen failed");
  }
  return fd;
}

std::uint16_t tcp_bound_port(int listen_fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw TransportError("getsockname failed");
  return ntohs(addr.sin_port);
}

ChannelPtr tcp_accept(int listen_fd, const std::string& name, ChannelClass cls) {
  int fd;
  do {
    fd = ::accept(listen_fd, nullptr, nullptr);
  } while (fd < 0 && errno == EINTR);
  if (fd < 0) throw TransportError("accept failed");
  return std::make_shared<TcpChannel>(fd, name, cls);
}

ChannelPtr tcp_connect(const std::string& host, std::uint16_t port, const std::string& name, ChannelClass cls,
                       int retries) {
  sockaddr_in addr = resolve(host, port);
  for (int attempt = 0;; ++attempt) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      return std::make_shared<TcpChannel>(fd, name, cls);
    }
    ::close(fd);
    if (attempt >= retries) throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
}

bool is_loopback_host(const std::string& host) {
  if (host == "localhost") return true;
  in_addr a{};
  if (::inet_pton(AF_INET, host.c_str(), &a) != 1) return false;
  return (ntohl(a.s_addr) >> 24) == 127;
}

}  // namespace duet::transport
