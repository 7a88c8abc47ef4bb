#include "duet/gadgets/eval.hpp"

#include "duet/common/error.hpp"
#include "duet/ring/fixed_point.hpp"

namespace duet::gadgets {

std::size_t Evaluator::rounds_for(GadgetKind kind, std::uint32_t arity) {
  switch (kind) {
    case GadgetKind::Relu:
    case GadgetKind::Sigmoid:
    case GadgetKind::Tanh: return 1;
    case GadgetKind::MaxTwo: return 2;
    case GadgetKind::Maxpool: return 2 * ceil_log2(arity);
    case GadgetKind::Argmax: return 2 * ceil_log2(arity) + 1;
  }
  throw ParameterError("unknown gadget kind");
}

Evaluator::Evaluator(const FieldConfig& cfg, Material material, std::vector<u64> inputs)
    : cfg_(cfg), mat_(std::move(material)), in_(std::move(inputs)), party_(mat_.party) {
  if (in_.size() != mat_.arity) throw DimensionError("gadget input count does not match material");
  for (u64 v : in_) {
    if (v >= cfg_.p.value()) throw RangeError("input share not reduced");
  }
  total_rounds_ = rounds_for(mat_.kind, mat_.arity);
  if (mat_.kind == GadgetKind::MaxTwo || mat_.kind == GadgetKind::Maxpool || mat_.kind == GadgetKind::Argmax) {
    level_values_ = in_;
    start_level();
    if (pairs_.empty()) max_share_ = level_values_[0];
  }
  if (total_rounds_ == 0) {
    // Single-input maxpool: the maximum is the input itself.
    out_ = in_;
  }
}

u64 Evaluator::mask_share(std::uint32_t index) {
  mat_.use_mask(index);
  return mat_.mask_shares[index];
}

void Evaluator::start_level() {
  pairs_.clear();
  carry_ = level_values_.size() % 2 == 1;
  if (carry_) carry_value_ = level_values_.back();
  for (std::size_t i = 0; i + 1 < level_values_.size(); i += 2) {
    pairs_.push_back({next_inst_++, level_values_[i], level_values_[i + 1]});
  }
  stage_b_ = false;
}

std::vector<u64> Evaluator::messages() {
  if (done()) throw ProtocolAbort("gadget already finished");
  const Modulus& p = cfg_.p;
  std::vector<u64> msg;
  switch (mat_.kind) {
    case GadgetKind::Relu:
    case GadgetKind::Sigmoid:
    case GadgetKind::Tanh:
      msg.push_back(p.add(in_[0], mask_share(0)));
      return msg;
    default: break;
  }
  if (!pairs_.empty()) {
    for (const auto& pr : pairs_) {
      const std::uint32_t b = pr.inst * kMaxTwoMasks;
      if (!stage_b_) {
        msg.push_back(p.add(pr.x, mask_share(b)));
        msg.push_back(p.add(pr.y, mask_share(b + 1)));
      } else {
        u64 u3 = p.sub(p.sub(pr.u2, pr.x), pr.y);
        msg.push_back(p.add(pr.u2, mask_share(b + 2)));
        msg.push_back(p.add(u3, mask_share(b + 3)));
        msg.push_back(p.add(pr.u1, mask_share(b + 4)));
        msg.push_back(p.add(pr.u2, mask_share(b + 5)));
      }
    }
    return msg;
  }
  // Argmax final round: open x_i - max + q_i.
  const std::uint32_t base = (mat_.arity - 1) * kMaxTwoMasks;
  for (std::uint32_t i = 0; i < mat_.arity; ++i) {
    msg.push_back(p.add(p.sub(in_[i], max_share_), mask_share(base + i)));
  }
  return msg;
}

void Evaluator::receive(std::span<const u64> opened) {
  if (done()) throw ProtocolAbort("gadget already finished");
  const Modulus& p = cfg_.p;
  for (u64 v : opened) {
    if (v >= p.value()) throw RangeError("opened value not reduced");
  }
  auto relu_share = [&](const fss::DifKey& key, u64 w) {
    auto s = fss::dif_eval(key, w);
    return p.sub(p.mul(w, s[0]), s[1]);
  };
  switch (mat_.kind) {
    case GadgetKind::Relu: {
      if (opened.size() != 1) throw DimensionError("ReLU expects one opened value");
      out_ = {relu_share(mat_.intervals[0], opened[0])};
      ++round_;
      return;
    }
    case GadgetKind::Sigmoid:
    case GadgetKind::Tanh: {
      if (opened.size() != 1) throw DimensionError("spline expects one opened value");
      const u64 w = opened[0];
      u64 slope = 0, rest = 0;
      for (const auto& key : mat_.intervals) {
        auto s = fss::dif_eval(key, w);
        slope = p.add(slope, s[0]);
        rest = p.add(rest, s[1]);
      }
      out_ = {truncate_share(party_, p.add(p.mul(w, slope), rest), cfg_.frac_bits, p)};
      ++round_;
      return;
    }
    default: break;
  }
  if (!pairs_.empty()) {
    const std::size_t per = stage_b_ ? 4 : 2;
    if (opened.size() != per * pairs_.size()) throw DimensionError("unexpected opened value count");
    std::vector<u64> next;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      Pair& pr = pairs_[k];
      const std::uint32_t ib = pr.inst * kMaxTwoIntervals, pb = pr.inst * kMaxTwoPoints;
      if (!stage_b_) {
        u64 X = opened[2 * k], Y = opened[2 * k + 1];
        u64 relu_x = relu_share(mat_.intervals[ib], X);
        u64 relu_y = relu_share(mat_.intervals[ib + 1], Y);
        u64 relu_d = relu_share(mat_.intervals[ib + 2], p.sub(X, Y));
        pr.u1 = p.add(relu_d, pr.y);
        pr.u2 = p.add(relu_x, relu_y);
      } else {
        u64 W3 = opened[4 * k], W4 = opened[4 * k + 1], W5 = opened[4 * k + 2], W6 = opened[4 * k + 3];
        auto a = fss::dpf_eval(mat_.points[pb], W3);
        auto c = fss::dpf_eval(mat_.points[pb + 1], W4);
        vec_add_inplace(a, c, p);
        // a = shares of (b, b*r5, b*r6) with b = [u2 = 0] + [u3 = 0].
        u64 m = p.sub(p.mul(W5, a[0]), a[1]);
        m = p.add(m, pr.u2);
        m = p.sub(m, p.mul(W6, a[0]));
        m = p.add(m, a[2]);
        next.push_back(m);
      }
    }
    ++round_;
    if (!stage_b_) {
      stage_b_ = true;
      return;
    }
    if (carry_) next.push_back(carry_value_);
    level_values_ = std::move(next);
    if (level_values_.size() > 1) {
      start_level();
      return;
    }
    pairs_.clear();
    max_share_ = level_values_[0];
    if (mat_.kind != GadgetKind::Argmax) out_ = {max_share_};
    return;
  }
  if (mat_.kind != GadgetKind::Argmax) throw ProtocolAbort("unexpected gadget round");
  if (opened.size() != mat_.arity) throw DimensionError("unexpected opened value count");
  const std::uint32_t base = (mat_.arity - 1) * kMaxTwoPoints;
  out_.clear();
  for (std::uint32_t i = 0; i < mat_.arity; ++i) out_.push_back(fss::dpf_eval(mat_.points[base + i], opened[i])[0]);
  ++round_;
}

const std::vector<u64>& Evaluator::output() const {
  if (!done()) throw ProtocolAbort("gadget output requested before completion");
  return out_;
}

std::array<std::vector<u64>, 2> run_local(const FieldConfig& cfg, std::array<Material, 2> mats,
                                          std::array<std::vector<u64>, 2> inputs) {
  Evaluator e0(cfg, std::move(mats[0]), std::move(inputs[0]));
  Evaluator e1(cfg, std::move(mats[1]), std::move(inputs[1]));
  while (!e0.done()) {
    auto m0 = e0.messages();
    auto m1 = e1.messages();
    auto opened = vec_add(m0, m1, cfg.p);
    e0.receive(opened);
    e1.receive(opened);
  }
  return {e0.output(), e1.output()};
}

void run_batch(std::span<Evaluator> evs, transport::Channel& peer) {
  if (evs.empty()) return;
  const std::size_t rounds = evs[0].rounds();
  const Modulus p = evs[0].modulus();
  for (const auto& e : evs) {
    if (e.rounds() != rounds || e.round() != 0) throw ParameterError("batched gadgets must be fresh and alike");
  }
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<u64> mine;
    std::vector<std::size_t> sizes;
    for (auto& e : evs) {
      auto m = e.messages();
      sizes.push_back(m.size());
      mine.insert(mine.end(), m.begin(), m.end());
    }
    peer.send_words(transport::MsgKind::MaskedReveal, mine);
    auto theirs = peer.recv_words(transport::MsgKind::MaskedReveal, mine.size());
    std::size_t off = 0;
    for (std::size_t i = 0; i < evs.size(); ++i) {
      std::vector<u64> opened(sizes[i]);
      for (std::size_t j = 0; j < sizes[i]; ++j) {
        if (theirs[off + j] >= p.value()) throw ProtocolAbort("peer reveal not reduced");
        opened[j] = p.add(mine[off + j], theirs[off + j]);
      }
      off += sizes[i];
      evs[i].receive(opened);
    }
  }
}

}  // namespace duet::gadgets
