#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "duet/gadgets/recipe.hpp"
#include "duet/tee/randomness.hpp"
#include "duet/tee/replicated.hpp"
#include "duet/transport/channel.hpp"

namespace duet::tee {

// Records which seed blocks each enclave has seen in the clear.
class ViewLog {
 public:
  void seed_block(unsigned server, unsigned enclave, std::uint64_t seed_id, unsigned block);
  void key_root(unsigned server, unsigned enclave, std::uint64_t key_id);
  // Empty when no enclave saw all blocks of a seed or any whole root.
  std::string violation() const;
  std::uint64_t events() const;

 private:
  mutable std::mutex mu_;
  std::map<std::array<std::uint64_t, 3>, unsigned> blocks_;  // (server, enclave, seed) -> block mask
  std::vector<std::array<std::uint64_t, 3>> roots_;
  std::uint64_t events_ = 0;
};

struct DistStats {
  Party3Stats gates;                  // per enclave; identical across the three
  std::uint64_t enclave_bytes = 0;    // payload bytes among the three enclaves
  std::uint64_t node_expansions = 0;  // single-block node expansions, all enclaves
  std::uint64_t local_prg_calls = 0;  // all block expansions outside 3PC operations
  std::uint64_t trees = 0;
  std::uint64_t levels = 0;
};

// Three enclaves of one server generating gadget material by replicated
// 3PC. Enclave i knows only seed i. Every tree node is expanded outside the
// 3PC: enclave i receives block i of the shared seed, expands it with
// g_i, and the three outputs form an XOR sharing of the node expansion.
class MultiTeeServer {
 public:
  MultiTeeServer(unsigned server, const SeedSet& seeds, const gadgets::FieldConfig& cfg,
                 std::shared_ptr<ViewLog> log = nullptr);
  ~MultiTeeServer();
  MultiTeeServer(const MultiTeeServer&) = delete;
  MultiTeeServer& operator=(const MultiTeeServer&) = delete;

  // Material for this server's party, one entry per recipe.
  std::vector<gadgets::Material> generate(const std::vector<gadgets::Recipe>& recipes);

  const DistStats& stats() const { return stats_; }
  void set_phase(transport::Phase ph);
  void add_traffic(transport::TrafficSummary& t) const;
  std::uint64_t counter() const;

 private:
  struct Enclave;

  unsigned b_;
  gadgets::FieldConfig cfg_;
  std::shared_ptr<ViewLog> log_;
  std::vector<transport::ChannelPtr> ring_;
  std::array<transport::ChannelPtr, kEnclaves> to_host_, host_side_;
  std::array<std::unique_ptr<Enclave>, kEnclaves> enclaves_;
  DistStats stats_;
  std::uint64_t calls_ = 0;
};

// One enclave holding all three pairwise streams; produces the same
// material as the three-enclave generator for the same seed set.
class SingleTee {
 public:
  SingleTee(unsigned server, const SeedSet& seeds, const gadgets::FieldConfig& cfg);
  std::vector<gadgets::Material> generate(const std::vector<gadgets::Recipe>& recipes);
  std::uint64_t counter() const { return tape_.counter(); }

 private:
  unsigned b_;
  gadgets::FieldConfig cfg_;
  CombinedTape tape_;
};

}  // namespace duet::tee
