#pragma once

#include <array>
#include <span>
#include <vector>

#include "duet/gadgets/recipe.hpp"
#include "duet/transport/channel.hpp"

namespace duet::gadgets {

// One party's online evaluation of a gadget instance, as a sequence of
// rounds. Each round: messages() gives this party's shares of values to be
// opened; receive() takes the opened values (sum of both parties' messages).
class Evaluator {
 public:
  Evaluator(const FieldConfig& cfg, Material material, std::vector<u64> inputs);

  const Modulus& modulus() const { return cfg_.p; }
  std::size_t rounds() const { return total_rounds_; }
  std::size_t round() const { return round_; }
  bool done() const { return round_ == total_rounds_; }
  std::vector<u64> messages();
  void receive(std::span<const u64> opened);
  // Output shares; valid once done().
  const std::vector<u64>& output() const;

  static std::size_t rounds_for(GadgetKind kind, std::uint32_t arity);

 private:
  struct Pair {
    std::uint32_t inst;  // max_two instance
    u64 x, y;
    u64 u1 = 0, u2 = 0;
  };

  void start_level();
  u64 mask_share(std::uint32_t index);

  FieldConfig cfg_;
  Material mat_;
  std::vector<u64> in_;
  std::vector<u64> out_;
  std::size_t total_rounds_ = 0;
  std::size_t round_ = 0;
  int party_ = 0;

  // Tournament state for maxpool / argmax.
  std::vector<u64> level_values_;
  std::vector<Pair> pairs_;
  bool carry_ = false;
  u64 carry_value_ = 0;
  std::uint32_t next_inst_ = 0;
  bool stage_b_ = false;
  u64 max_share_ = 0;
};

// Runs both parties' evaluators in-process; returns both output shares.
std::array<std::vector<u64>, 2> run_local(const FieldConfig& cfg, std::array<Material, 2> mats,
                                          std::array<std::vector<u64>, 2> inputs);

// Runs a batch of same-kind evaluators in lockstep over a channel. Each
// round is one MaskedReveal frame carrying every instance's messages.
void run_batch(std::span<Evaluator> evs, transport::Channel& peer);

}  // namespace duet::gadgets
