#include "duet/tee/enclave.hpp"

#include <cstring>
#include <exception>
#include <thread>

#include "duet/common/error.hpp"
#include "duet/fss/keys.hpp"

namespace duet::tee {

using fss::TreeKey;
using fss::TreeKind;
using gadgets::Material;
using gadgets::MaskExpr;
using gadgets::Recipe;
using transport::MsgKind;

namespace {

constexpr std::size_t kSeedBits = fss::kSeedBlocks * 128;
constexpr std::size_t kNodeBits = fss::kNodeBitBytes * 8;

BitVec block_bits(const Block& b) { return BitVec::from_bytes(b, 128); }

fss::Seed seed_from_bits(const BitVec& v) {
  auto bytes = v.to_bytes();
  fss::Seed s;
  for (std::size_t j = 0; j < fss::kSeedBlocks; ++j) std::memcpy(s[j].data(), bytes.data() + 16 * j, 16);
  return s;
}

BShare gather(const BShare& x, const std::vector<std::size_t>& idx) {
  BShare r{BitVec(idx.size()), BitVec(idx.size())};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    r.a.set(k, x.a.get(idx[k]));
    r.b.set(k, x.b.get(idx[k]));
  }
  return r;
}

std::uint64_t seed_id(std::uint64_t call, std::size_t tree, unsigned level, unsigned b) {
  return (call << 40) | (static_cast<std::uint64_t>(tree) << 8) | (level << 1) | b;
}

struct TreeJob {
  TreeKind kind;
  std::size_t L;
  std::size_t root[2];
  std::size_t woff;  // offset in the all-tree word layout
  std::size_t coff;  // offset in the comparison-tree word layout
};

struct IntervalJob {
  std::size_t lower, upper;  // tree indices
  std::size_t share0_off;
};

struct RecipeLayout {
  std::size_t mask_off;
  std::vector<std::size_t> intervals;  // IntervalJob indices
  std::vector<std::size_t> points;     // tree indices
};

}  // namespace

void ViewLog::seed_block(unsigned server, unsigned enclave, std::uint64_t seed, unsigned block) {
  std::lock_guard lk(mu_);
  blocks_[{server, enclave, seed}] |= 1u << block;
  ++events_;
}

void ViewLog::key_root(unsigned server, unsigned enclave, std::uint64_t key_id) {
  std::lock_guard lk(mu_);
  roots_.push_back({server, enclave, key_id});
  ++events_;
}

std::string ViewLog::violation() const {
  std::lock_guard lk(mu_);
  for (const auto& [k, mask] : blocks_) {
    if (mask == 7) {
      return "enclave " + std::to_string(k[1]) + " of server " + std::to_string(k[0]) + " saw every block of seed " +
             std::to_string(k[2]);
    }
  }
  if (!roots_.empty()) return "enclave " + std::to_string(roots_[0][1]) + " saw a whole key root";
  return {};
}

std::uint64_t ViewLog::events() const {
  std::lock_guard lk(mu_);
  return events_;
}

struct MultiTeeServer::Enclave {
  unsigned b, i;
  gadgets::FieldConfig cfg;
  PrfStream stream;
  Block zero_key;
  Party3 P;
  transport::Channel& host;
  std::shared_ptr<ViewLog> log;
  bool ready = false;
  std::uint64_t node_expansions = 0;
  std::uint64_t local_prg = 0;

  Enclave(unsigned b_, unsigned i_, const Block& seed, std::uint16_t epoch, const gadgets::FieldConfig& c,
          transport::Channel& prev, transport::Channel& next, transport::Channel& h, std::shared_ptr<ViewLog> lg)
      : b(b_),
        i(i_),
        cfg(c),
        stream(seed, epoch),
        zero_key(Aes128(seed).encrypt(block_from_u64(b_, 0x7a65726f00ULL))),
        P(i_, prev, next, c.p),
        host(h),
        log(std::move(lg)) {}

  AShare eval_expr(const MaskExpr& e, const AShare& masks, std::size_t off) const {
    const Modulus& p = cfg.p;
    AShare r = P.aconst({e.constant % p.value()});
    for (auto [idx, coeff] : e.terms) r = P.add(r, P.scale(Party3::slice(masks, off + idx, 1), coeff % p.value()));
    return r;
  }

  // Block i of every seed in S[0], S[1]; one round.
  std::vector<Block> redistribute(const BShare S[2], std::size_t T, std::uint64_t call, unsigned level) {
    const unsigned send_blk = (i + 2) % 3;
    Bytes out;
    out.reserve(2 * T * 16);
    for (int bb = 0; bb < 2; ++bb) {
      for (std::size_t t = 0; t < T; ++t) {
        auto part = S[bb].b.slice(t * kSeedBits + 128 * send_blk, 128).to_bytes();
        out.insert(out.end(), part.begin(), part.end());
      }
    }
    Bytes in = P.exchange_back(out);
    if (in.size() != out.size()) throw ProtocolAbort("malformed block redistribution");
    std::vector<Block> blocks(2 * T);
    for (int bb = 0; bb < 2; ++bb) {
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t k = bb * T + t;
        auto own = (S[bb].a.slice(t * kSeedBits + 128 * i, 128) ^ S[bb].b.slice(t * kSeedBits + 128 * i, 128));
        Block x;
        std::memcpy(x.data(), in.data() + 16 * k, 16);
        auto ob = own.to_bytes();
        Block o;
        std::memcpy(o.data(), ob.data(), 16);
        blocks[k] = block_xor(x, o);
        if (log) log->seed_block(b, i, seed_id(call, t, level, bb), i);
      }
    }
    return blocks;
  }

  void run(const std::vector<Recipe>& recipes, std::uint64_t call) {
    fss::reset_prg_block_calls();
    const auto in_protocol_mark = P.stats().prg_calls_in_protocol;
    if (!ready) {
      P.setup(zero_key);
      ready = true;
    }
    const Modulus& p = cfg.p;
    const unsigned n = cfg.domain_bits;

    // Own components of every random draw, in tape order.
    std::vector<u64> mask_own, mask_sh, share0_own;
    BitVec roots_own;
    std::size_t root_count = 0;
    std::vector<RecipeLayout> layout;
    std::vector<std::size_t> iv_root, pt_root, iv_share0;
    for (const auto& r : recipes) {
      for (std::uint32_t m = 0; m < r.mask_count; ++m) {
        auto g = genrand(stream, p, b);
        mask_own.push_back(g.r);
        mask_sh.push_back(g.share);
      }
      auto draw_root = [&] {
        for (std::size_t j = 0; j < fss::kSeedBlocks; ++j) roots_own.append(block_bits(stream.next_block()));
        return root_count++;
      };
      for (const auto& iv : r.intervals) {
        iv_root.push_back(draw_root());
        for (int k = 0; k < 3; ++k) draw_root();
        iv_share0.push_back(share0_own.size());
        for (std::size_t k = 0; k < iv.payload.size(); ++k) share0_own.push_back(stream.next_mod(p));
      }
      for (std::size_t k = 0; k < r.points.size(); ++k) {
        pt_root.push_back(draw_root());
        draw_root();
      }
    }
    std::vector<BShare> bo;
    std::vector<AShare> ao;
    P.distribute_round({&roots_own}, bo, {&mask_own, &share0_own}, ao);
    const BShare roots = bo[0];
    const AShare masks = ao[0], share0 = ao[1];

    // Tree jobs: per recipe, each interval's lower and upper trees, then points.
    std::vector<TreeJob> trees;
    std::vector<IntervalJob> ivs;
    AShare alphas, betas;
    std::size_t moff = 0, ivk = 0, ptk = 0, W = 0, Wc = 0;
    for (const auto& r : recipes) {
      RecipeLayout lay;
      lay.mask_off = moff;
      auto add_tree = [&](TreeKind kind, const MaskExpr& alpha, const std::vector<MaskExpr>& payload,
                          std::size_t root) {
        TreeJob t{kind, payload.size(), {root, root + 1}, W, Wc};
        W += t.L;
        if (kind == TreeKind::LessThan) Wc += t.L;
        Party3::append(alphas, eval_expr(alpha, masks, moff));
        for (const auto& e : payload) Party3::append(betas, eval_expr(e, masks, moff));
        trees.push_back(t);
        return trees.size() - 1;
      };
      for (const auto& iv : r.intervals) {
        if (iv.payload.empty()) throw DimensionError("payload must be non-empty");
        IntervalJob job;
        job.lower = add_tree(TreeKind::LessThan, iv.lo, iv.payload, iv_root[ivk]);
        job.upper = add_tree(TreeKind::LessThan, iv.hi, iv.payload, iv_root[ivk] + 2);
        job.share0_off = iv_share0[ivk];
        ++ivk;
        lay.intervals.push_back(ivs.size());
        ivs.push_back(job);
      }
      for (const auto& pt : r.points) {
        if (pt.payload.empty()) throw DimensionError("payload must be non-empty");
        lay.points.push_back(add_tree(TreeKind::Point, pt.alpha, pt.payload, pt_root[ptk++]));
      }
      moff += r.mask_count;
      layout.push_back(std::move(lay));
    }
    const std::size_t T = trees.size();
    std::vector<TreeKey> keys(T);
    AShare offsets;
    if (T > 0) {
      std::vector<std::size_t> cmp_idx, Lc, Lall;
      for (std::size_t t = 0; t < T; ++t) {
        Lall.push_back(trees[t].L);
        if (trees[t].kind == TreeKind::LessThan) {
          cmp_idx.push_back(t);
          Lc.push_back(trees[t].L);
        }
      }
      const std::size_t C = cmp_idx.size();
      AShare betaC;
      for (auto t : cmp_idx) Party3::append(betaC, Party3::slice(betas, trees[t].woff, trees[t].L));

      Sliced bits = a2b(P, alphas, n);

      // Wrap bits and offset shares of the interval keys.
      if (!ivs.empty()) {
        std::vector<std::size_t> lo_idx, hi_idx, Liv;
        AShare beta_iv;
        for (const auto& job : ivs) {
          lo_idx.push_back(job.lower);
          hi_idx.push_back(job.upper);
          Liv.push_back(trees[job.lower].L);
          Party3::append(beta_iv, Party3::slice(betas, trees[job.lower].woff, trees[job.lower].L));
        }
        Sliced lo(n), hi(n);
        for (unsigned k = 0; k < n; ++k) {
          lo[k] = gather(bits[k], lo_idx);
          hi[k] = gather(bits[k], hi_idx);
        }
        AShare wrap = b2a(P, greater_than(P, lo, hi));
        AShare wb = P.amul(Party3::repeat(wrap, Liv), beta_iv);
        offsets = b == 0 ? share0 : P.sub(wb, share0);
      }

      // Arithmetic copies of the path bits of comparison trees, all levels.
      std::vector<AShare> aA(n);
      if (C > 0) {
        BShare all;
        for (unsigned lv = 0; lv < n; ++lv) all.append(gather(bits[n - 1 - lv], cmp_idx));
        AShare allA = b2a(P, all);
        for (unsigned lv = 0; lv < n; ++lv) aA[lv] = Party3::slice(allA, lv * C, C);
      }

      BShare S[2];
      for (int bb = 0; bb < 2; ++bb)
        for (const auto& t : trees) S[bb].append(roots.slice(t.root[bb] * kSeedBits, kSeedBits));
      BShare tb[2] = {P.bconst(BitVec(T)), P.bconst(BitVec::ones(T))};
      AShare t1A = P.aconst(std::vector<u64>(C, 1));
      AShare valpha = P.aconst(std::vector<u64>(Wc, 0));
      for (std::size_t t = 0; t < T; ++t) {
        keys[t].kind = trees[t].kind;
        keys[t].party = static_cast<std::uint8_t>(b);
        keys[t].modulus = p.value();
        keys[t].domain_bits = n;
        keys[t].payload_len = static_cast<std::uint32_t>(trees[t].L);
        keys[t].root = seed_from_bits(roots.a.slice(trees[t].root[b] * kSeedBits, kSeedBits));
        keys[t].cws.resize(n);
      }

      for (unsigned lv = 0; lv < n; ++lv) {
        const BShare& a = bits[n - 1 - lv];
        auto blocks = redistribute(S, T, call, lv);
        BitVec Eown[2];
        std::vector<u64> Wown[2][2];
        for (int bb = 0; bb < 2; ++bb) {
          for (std::size_t t = 0; t < T; ++t) {
            const Block& blk = blocks[bb * T + t];
            auto nb = fss::node_bits_block(i, blk);
            ++node_expansions;
            Eown[bb].append(BitVec::from_bytes(nb, kNodeBits));
            if (trees[t].kind != TreeKind::LessThan) continue;
            for (unsigned dir = 0; dir < 2; ++dir) {
              std::vector<u64> w(trees[t].L);
              fss::node_words_block(i, blk, p, dir, w);
              Wown[bb][dir].insert(Wown[bb][dir].end(), w.begin(), w.end());
            }
          }
        }
        std::vector<BShare> eb;
        std::vector<AShare> aw;
        P.reshare_round({&Eown[0], &Eown[1]}, eb, {&Wown[0][0], &Wown[0][1], &Wown[1][0], &Wown[1][1]}, aw);
        // Wd[dir][seed]
        const AShare* Wd[2][2] = {{&aw[0], &aw[2]}, {&aw[1], &aw[3]}};
        BShare Es0[2], Es1[2], Et0[2], Et1[2];
        for (int bb = 0; bb < 2; ++bb) {
          for (std::size_t t = 0; t < T; ++t) {
            Es0[bb].append(eb[bb].slice(t * kNodeBits, kSeedBits));
            Es1[bb].append(eb[bb].slice(t * kNodeBits + kSeedBits, kSeedBits));
            Et0[bb].append(eb[bb].slice(t * kNodeBits + 2 * kSeedBits, 1));
            Et1[bb].append(eb[bb].slice(t * kNodeBits + 2 * kSeedBits + 1, 1));
          }
        }
        BShare Ds1 = Es1[0] ^ Es1[1];
        BShare ds = (Es0[0] ^ Es0[1]) ^ Ds1;
        BShare Dt0 = Et0[0] ^ Et0[1], Dt1 = Et1[0] ^ Et1[1];
        BShare A = a.broadcast(kSeedBits);
        BShare es[2] = {Es0[0] ^ Es1[0], Es0[1] ^ Es1[1]};
        BShare et[2] = {Et0[0] ^ Et1[0], Et0[1] ^ Et1[1]};
        AShare aRep, dd;
        if (C > 0) {
          aRep = Party3::repeat(aA[lv], Lc);
          dd = P.sub(P.sub(*Wd[0][1], *Wd[1][1]), P.sub(*Wd[0][0], *Wd[1][0]));
        }
        std::vector<std::pair<const AShare*, const AShare*>> am;
        if (C > 0) am = {{&aRep, &dd}, {&aRep, &betaC}};
        P.mul_round({{&A, &ds}, {&A, &es[0]}, {&A, &es[1]}, {&a, &et[0]}, {&a, &et[1]}}, bo, am, ao);
        BShare cwS = Ds1 ^ bo[0];
        BShare keep_s[2] = {Es0[0] ^ bo[1], Es0[1] ^ bo[2]};
        BShare keep_t[2] = {Et0[0] ^ bo[3], Et0[1] ^ bo[4]};
        BShare cwTL = P.bnot(Dt0 ^ a), cwTR = Dt1 ^ a;
        AShare Pm, pre;
        if (C > 0) {
          Pm = ao[0];
          pre = P.add(P.sub(P.add(P.sub(*Wd[1][1], *Wd[1][0]), Pm), valpha), ao[1]);
        }
        std::vector<BitVec> pub;
        std::vector<std::vector<u64>> unused;
        P.open_round({&cwS, &cwTL, &cwTR}, pub, {}, unused);
        const BitVec &pS = pub[0], &pL = pub[1], &pR = pub[2];

        BShare tck = P.bconst(pL) ^ (a & (pL ^ pR));
        AShare t1Rep;
        am.clear();
        if (C > 0) {
          t1Rep = Party3::repeat(t1A, Lc);
          am = {{&t1Rep, &pre}};
        }
        P.mul_round({{&tb[0], &tck}, {&tb[1], &tck}}, bo, am, ao);
        for (int bb = 0; bb < 2; ++bb) {
          S[bb] = keep_s[bb] ^ (tb[bb].broadcast(kSeedBits) & pS);
          tb[bb] = keep_t[bb] ^ bo[bb];
        }
        std::vector<u64> cwv;
        if (C > 0) {
          cwv = P.open(P.sub(pre, P.scale(ao[0], 2)));
          valpha = P.add(valpha, P.add(P.add(P.sub(*Wd[0][0], *Wd[0][1]), Pm), pre));
          if (lv + 1 < n) t1A = b2a(P, gather(tb[1], cmp_idx));
        }
        for (std::size_t t = 0; t < T; ++t) {
          auto& cw = keys[t].cws[lv];
          cw.s = seed_from_bits(pS.slice(t * kSeedBits, kSeedBits));
          cw.t_left = pL.get(t);
          cw.t_right = pR.get(t);
          if (trees[t].kind == TreeKind::LessThan)
            cw.v.assign(cwv.begin() + trees[t].coff, cwv.begin() + trees[t].coff + trees[t].L);
        }
      }

      // Leaves.
      auto blocks = redistribute(S, T, call, n);
      std::vector<u64> Cown[2];
      for (int bb = 0; bb < 2; ++bb) {
        for (std::size_t t = 0; t < T; ++t) {
          std::vector<u64> w(trees[t].L);
          fss::convert_block(i, blocks[bb * T + t], p, w);
          Cown[bb].insert(Cown[bb].end(), w.begin(), w.end());
        }
      }
      std::vector<BShare> none;
      P.reshare_round({}, none, {&Cown[0], &Cown[1]}, ao);
      const AShare c0 = ao[0], c1 = ao[1];
      AShare t1F = b2a(P, tb[1]);
      AShare preL;
      for (std::size_t t = 0; t < T; ++t) {
        const auto& tr = trees[t];
        AShare d = P.sub(Party3::slice(c1, tr.woff, tr.L), Party3::slice(c0, tr.woff, tr.L));
        if (tr.kind == TreeKind::LessThan)
          d = P.sub(d, Party3::slice(valpha, tr.coff, tr.L));
        else
          d = P.add(d, Party3::slice(betas, tr.woff, tr.L));
        Party3::append(preL, d);
      }
      AShare R = P.amul(Party3::repeat(t1F, Lall), preL);
      auto leaf = P.open(P.sub(preL, P.scale(R, 2)));
      for (std::size_t t = 0; t < T; ++t)
        keys[t].leaf.assign(leaf.begin() + trees[t].woff, leaf.begin() + trees[t].woff + trees[t].L);
    }

    // This enclave's components of every material, for the host to combine.
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(recipes.size()));
    for (std::size_t r = 0; r < recipes.size(); ++r) {
      const auto& lay = layout[r];
      Material m;
      m.kind = recipes[r].kind;
      m.party = static_cast<std::uint8_t>(b);
      m.arity = recipes[r].arity;
      m.mask_shares.assign(mask_sh.begin() + lay.mask_off, mask_sh.begin() + lay.mask_off + recipes[r].mask_count);
      for (auto k : lay.intervals) {
        const auto& job = ivs[k];
        const std::size_t L = trees[job.lower].L;
        fss::DifKey dk{keys[job.lower], keys[job.upper],
                       std::vector<u64>(offsets.a.begin() + job.share0_off, offsets.a.begin() + job.share0_off + L)};
        m.intervals.push_back(std::move(dk));
      }
      for (auto t : lay.points) m.points.push_back(keys[t]);
      gadgets::write_material(w, m);
    }
    host.send(MsgKind::MaterialDelivery, std::move(w).take());
    local_prg += fss::prg_block_calls() - (P.stats().prg_calls_in_protocol - in_protocol_mark);
  }
};

namespace {

void combine_tree(TreeKey& dst, const TreeKey& part) {
  TreeKey x = dst, y = part;
  x.root = {};
  y.root = {};
  if (!(x == y)) throw ProtocolAbort("enclaves disagree on public key data");
  dst.root = fss::seed_xor(dst.root, part.root);
}

void combine_words(std::vector<u64>& dst, const std::vector<u64>& part, const Modulus& p) {
  if (dst.size() != part.size()) throw ProtocolAbort("enclave share length mismatch");
  vec_add_inplace(dst, part, p);
}

Material combine(std::array<Material, kEnclaves> parts, const Modulus& p) {
  Material m = std::move(parts[0]);
  for (unsigned e = 1; e < kEnclaves; ++e) {
    const Material& q = parts[e];
    if (q.kind != m.kind || q.party != m.party || q.arity != m.arity || q.intervals.size() != m.intervals.size() ||
        q.points.size() != m.points.size()) {
      throw ProtocolAbort("enclaves disagree on material shape");
    }
    combine_words(m.mask_shares, q.mask_shares, p);
    for (std::size_t k = 0; k < m.intervals.size(); ++k) {
      combine_tree(m.intervals[k].lower, q.intervals[k].lower);
      combine_tree(m.intervals[k].upper, q.intervals[k].upper);
      combine_words(m.intervals[k].offset, q.intervals[k].offset, p);
    }
    for (std::size_t k = 0; k < m.points.size(); ++k) combine_tree(m.points[k], q.points[k]);
  }
  return m;
}

}  // namespace

MultiTeeServer::MultiTeeServer(unsigned server, const SeedSet& seeds, const gadgets::FieldConfig& cfg,
                               std::shared_ptr<ViewLog> log)
    : b_(server), cfg_(cfg), log_(std::move(log)) {
  if (server > 1) throw ParameterError("server index must be 0 or 1");
  std::array<transport::ChannelPtr, kEnclaves> prev, next;
  const std::string tag = "tee" + std::to_string(server) + ".";
  for (unsigned e = 0; e < kEnclaves; ++e) {
    unsigned f = (e + 1) % kEnclaves;
    auto [x, y] = transport::make_inproc_pair(tag + std::to_string(e) + ">" + std::to_string(f),
                                              tag + std::to_string(f) + "<" + std::to_string(e),
                                              transport::ChannelClass::EnclaveEnclave);
    next[e] = x;
    prev[f] = y;
    ring_.push_back(x);
    ring_.push_back(y);
    auto [h0, h1] = transport::make_inproc_pair(tag + std::to_string(e) + ">host",
                                                "host" + std::to_string(server) + "<tee" + std::to_string(e),
                                                transport::ChannelClass::LocalIntraServer);
    to_host_[e] = h0;
    host_side_[e] = h1;
  }
  for (unsigned e = 0; e < kEnclaves; ++e) {
    enclaves_[e] = std::make_unique<Enclave>(server, e, seeds.seeds[e], seeds.epoch, cfg, *prev[e], *next[e],
                                             *to_host_[e], log_);
  }
}

MultiTeeServer::~MultiTeeServer() = default;

std::vector<Material> MultiTeeServer::generate(const std::vector<Recipe>& recipes) {
  const std::uint64_t call = ++calls_;
  std::array<std::exception_ptr, kEnclaves> errs;
  std::array<std::thread, kEnclaves> th;
  const auto prg_before = [&] {
    std::uint64_t s = 0;
    for (auto& e : enclaves_) s += e->local_prg;
    return s;
  }();
  std::uint64_t nodes_before = 0;
  for (auto& e : enclaves_) nodes_before += e->node_expansions;
  for (unsigned e = 0; e < kEnclaves; ++e) {
    th[e] = std::thread([&, e] {
      try {
        enclaves_[e]->run(recipes, call);
      } catch (...) {
        errs[e] = std::current_exception();
        for (auto& c : ring_) c->close();
        to_host_[e]->close();
      }
    });
  }
  std::array<Bytes, kEnclaves> blobs;
  std::exception_ptr host_err;
  try {
    for (unsigned e = 0; e < kEnclaves; ++e) blobs[e] = host_side_[e]->recv_expect(MsgKind::MaterialDelivery);
  } catch (...) {
    host_err = std::current_exception();
  }
  for (auto& t : th) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  if (host_err) std::rethrow_exception(host_err);

  std::vector<std::array<Material, kEnclaves>> parts(recipes.size());
  for (unsigned e = 0; e < kEnclaves; ++e) {
    ByteReader r(blobs[e]);
    if (r.u32() != recipes.size()) throw ProtocolAbort("enclave returned the wrong material count");
    for (std::size_t k = 0; k < recipes.size(); ++k) parts[k][e] = gadgets::read_material(r);
    r.expect_done();
  }
  std::vector<Material> out;
  for (auto& pa : parts) out.push_back(combine(std::move(pa), cfg_.p));

  stats_.gates = enclaves_[0]->P.stats();
  stats_.enclave_bytes = 0;
  for (const auto& c : ring_) stats_.enclave_bytes += c->meter().total().payload_bytes_sent;
  std::uint64_t prg_after = 0, nodes_after = 0;
  for (auto& e : enclaves_) {
    prg_after += e->local_prg;
    nodes_after += e->node_expansions;
  }
  stats_.local_prg_calls += prg_after - prg_before;
  stats_.node_expansions += nodes_after - nodes_before;
  for (const auto& r : recipes) stats_.trees += 2 * r.intervals.size() + r.points.size();
  stats_.levels = cfg_.domain_bits;
  return out;
}

void MultiTeeServer::set_phase(transport::Phase ph) {
  for (auto& c : ring_) c->set_phase(ph);
  for (auto& c : to_host_) c->set_phase(ph);
  for (auto& c : host_side_) c->set_phase(ph);
}

void MultiTeeServer::add_traffic(transport::TrafficSummary& t) const {
  for (const auto& c : ring_) t.add(*c);
  for (const auto& c : to_host_) t.add(*c);
  for (const auto& c : host_side_) t.add(*c);
}

std::uint64_t MultiTeeServer::counter() const { return enclaves_[0]->stream.counter(); }

SingleTee::SingleTee(unsigned server, const SeedSet& seeds, const gadgets::FieldConfig& cfg)
    : b_(server), cfg_(cfg), tape_(seeds, cfg.p) {
  if (server > 1) throw ParameterError("server index must be 0 or 1");
}

std::vector<Material> SingleTee::generate(const std::vector<Recipe>& recipes) {
  std::vector<Material> out;
  out.reserve(recipes.size());
  for (const auto& r : recipes) out.push_back(std::move(gadgets::build_material(r, cfg_, tape_)[b_]));
  return out;
}

}  // namespace duet::tee
