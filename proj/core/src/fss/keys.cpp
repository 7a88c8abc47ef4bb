#include "duet/fss/keys.hpp"

#include <cstring>

#include "duet/common/error.hpp"

namespace duet::fss {

namespace {

constexpr std::uint32_t kKeyMagic = 0x4b535344;  // "DSSK"

bool bit_at(u64 x, unsigned domain_bits, unsigned level) { return (x >> (domain_bits - 1 - level)) & 1; }

void check_gen_args(unsigned domain_bits, const Modulus& p, u64 alpha, std::span<const u64> beta) {
  if (domain_bits == 0 || domain_bits > 63) throw ParameterError("domain bits must lie in [1, 63]");
  if (alpha >> domain_bits) throw RangeError("alpha outside the key domain");
  if (beta.empty()) throw DimensionError("payload must be non-empty");
  for (u64 b : beta) {
    if (b >= p.value()) throw RangeError("payload element not reduced mod p");
  }
}

// out = sign * v, where sign is -1 when negate is set.
void scale_sign(std::span<u64> v, bool negate, const Modulus& p) {
  if (!negate) return;
  for (auto& x : v) x = p.neg(x);
}

}  // namespace

std::size_t TreeKey::size_bytes() const {
  ByteWriter w;
  write_tree_key(w, *this);
  return w.size();
}

std::size_t DifKey::size_bytes() const {
  ByteWriter w;
  write_dif_key(w, *this);
  return w.size();
}

Seed random_seed(Rng& rng) {
  Seed s;
  for (auto& b : s) b = rng.next_block();
  return s;
}

std::pair<TreeKey, TreeKey> tree_gen(TreeKind kind, unsigned domain_bits, const Modulus& p, u64 alpha,
                                     std::span<const u64> beta, const Seed& root0, const Seed& root1) {
  check_gen_args(domain_bits, p, alpha, beta);
  const std::size_t L = beta.size();
  const bool cmp = kind == TreeKind::LessThan;
  TreeKey k[2];
  for (int b = 0; b < 2; ++b) {
    k[b].kind = kind;
    k[b].party = static_cast<std::uint8_t>(b);
    k[b].modulus = p.value();
    k[b].domain_bits = domain_bits;
    k[b].payload_len = static_cast<std::uint32_t>(L);
  }
  k[0].root = root0;
  k[1].root = root1;

  Seed s[2] = {root0, root1};
  bool t[2] = {false, true};
  std::vector<u64> v_alpha(L, 0);
  for (unsigned i = 0; i < domain_bits; ++i) {
    const bool a = bit_at(alpha, domain_bits, i);
    const unsigned keep = a ? 1 : 0, lose = 1 - keep;
    NodeBits e[2] = {expand_node_bits(s[0]), expand_node_bits(s[1])};
    CorrectionWord cw;
    cw.s = seed_xor(e[0].s[lose], e[1].s[lose]);
    cw.t_left = e[0].t[0] ^ e[1].t[0] ^ a ^ 1;
    cw.t_right = e[0].t[1] ^ e[1].t[1] ^ a;
    if (cmp) {
      auto v0_lose = expand_node_words(s[0], p, lose, L);
      auto v1_lose = expand_node_words(s[1], p, lose, L);
      auto v0_keep = expand_node_words(s[0], p, keep, L);
      auto v1_keep = expand_node_words(s[1], p, keep, L);
      // Inputs in the left subtree are below alpha when alpha's bit is 1.
      cw.v = vec_sub(v1_lose, v0_lose, p);
      vec_sub_inplace(cw.v, v_alpha, p);
      if (lose == 0) vec_add_inplace(cw.v, beta, p);
      scale_sign(cw.v, t[1], p);
      vec_sub_inplace(v_alpha, v1_keep, p);
      vec_add_inplace(v_alpha, v0_keep, p);
      auto signed_cw = cw.v;
      scale_sign(signed_cw, t[1], p);
      vec_add_inplace(v_alpha, signed_cw, p);
    }
    const bool t_cw_keep = keep ? cw.t_right : cw.t_left;
    for (int b = 0; b < 2; ++b) {
      s[b] = t[b] ? seed_xor(e[b].s[keep], cw.s) : e[b].s[keep];
      t[b] = e[b].t[keep] ^ (t[b] && t_cw_keep);
    }
    k[0].cws.push_back(cw);
    k[1].cws.push_back(std::move(cw));
  }
  auto c0 = convert_seed(s[0], p, L);
  auto c1 = convert_seed(s[1], p, L);
  std::vector<u64> leaf;
  if (cmp) {
    leaf = vec_sub(c1, c0, p);
    vec_sub_inplace(leaf, v_alpha, p);
  } else {
    leaf = vec_sub(std::vector<u64>(beta.begin(), beta.end()), c0, p);
    vec_add_inplace(leaf, c1, p);
  }
  scale_sign(leaf, t[1], p);
  k[0].leaf = leaf;
  k[1].leaf = std::move(leaf);
  return {std::move(k[0]), std::move(k[1])};
}

std::vector<u64> tree_eval(const TreeKey& key, u64 x) {
  const unsigned n = key.domain_bits;
  if (n == 0 || n > 63 || key.cws.size() != n) throw FormatError("malformed FSS key");
  if (x >> n) throw RangeError("evaluation point outside the key domain");
  const Modulus p(key.modulus);
  const std::size_t L = key.payload_len;
  const bool cmp = key.kind == TreeKind::LessThan;
  Seed s = key.root;
  bool t = key.party == 1;
  std::vector<u64> acc(L, 0);
  for (unsigned i = 0; i < n; ++i) {
    const CorrectionWord& cw = key.cws[i];
    const unsigned dir = bit_at(x, n, i);
    NodeBits e = expand_node_bits(s);
    if (cmp) {
      auto v = expand_node_words(s, p, dir, L);
      if (t) vec_add_inplace(v, cw.v, p);
      vec_add_inplace(acc, v, p);
    }
    if (t) {
      e.s[dir] = seed_xor(e.s[dir], cw.s);
      e.t[dir] ^= dir ? cw.t_right : cw.t_left;
    }
    s = e.s[dir];
    t = e.t[dir];
  }
  auto c = convert_seed(s, p, L);
  if (t) vec_add_inplace(c, key.leaf, p);
  vec_add_inplace(acc, c, p);
  scale_sign(acc, key.party == 1, p);
  return acc;
}

std::pair<DpfKey, DpfKey> dpf_gen(u64 alpha, std::span<const u64> beta, unsigned domain_bits, const Modulus& p,
                                  Rng& rng) {
  Seed r0 = random_seed(rng), r1 = random_seed(rng);
  return tree_gen(TreeKind::Point, domain_bits, p, alpha, beta, r0, r1);
}

std::vector<u64> dpf_eval(const DpfKey& key, u64 x) {
  if (key.kind != TreeKind::Point) throw ParameterError("not a point-function key");
  return tree_eval(key, x);
}

std::pair<DcfKey, DcfKey> dcf_gen(u64 alpha, std::span<const u64> beta, unsigned domain_bits, const Modulus& p,
                                  Rng& rng) {
  Seed r0 = random_seed(rng), r1 = random_seed(rng);
  return tree_gen(TreeKind::LessThan, domain_bits, p, alpha, beta, r0, r1);
}

std::vector<u64> dcf_eval(const DcfKey& key, u64 x) {
  if (key.kind != TreeKind::LessThan) throw ParameterError("not a comparison key");
  return tree_eval(key, x);
}

std::pair<DifKey, DifKey> dif_gen_explicit(u64 lo, u64 hi, bool wrap, std::span<const u64> beta,
                                           unsigned domain_bits, const Modulus& p, const Seed roots[4],
                                           std::span<const u64> offset_share0) {
  if (offset_share0.size() != beta.size()) throw DimensionError("offset share length mismatch");
  auto [lo0, lo1] = tree_gen(TreeKind::LessThan, domain_bits, p, lo, beta, roots[0], roots[1]);
  auto [hi0, hi1] = tree_gen(TreeKind::LessThan, domain_bits, p, hi, beta, roots[2], roots[3]);
  std::vector<u64> off0(offset_share0.begin(), offset_share0.end());
  std::vector<u64> off1(beta.size(), 0);
  if (wrap) off1.assign(beta.begin(), beta.end());
  vec_sub_inplace(off1, off0, p);
  DifKey k0{std::move(lo0), std::move(hi0), std::move(off0)};
  DifKey k1{std::move(lo1), std::move(hi1), std::move(off1)};
  return {std::move(k0), std::move(k1)};
}

namespace {

std::pair<DifKey, DifKey> dif_random(u64 lo, u64 hi, bool wrap, std::span<const u64> beta, unsigned domain_bits,
                                     const Modulus& p, Rng& rng) {
  Seed roots[4];
  for (auto& r : roots) r = random_seed(rng);
  auto share0 = rng.uniform_vec(beta.size(), p.value());
  return dif_gen_explicit(lo, hi, wrap, beta, domain_bits, p, roots, share0);
}

void check_domain(u64 domain_size, unsigned domain_bits) {
  if (domain_bits == 0 || domain_bits > 63) throw ParameterError("domain bits must lie in [1, 63]");
  if (domain_size < 2 || domain_size > (1ULL << domain_bits)) throw ParameterError("domain size does not fit the key width");
}

}  // namespace

std::pair<DifKey, DifKey> dif_gen(u64 alpha1, u64 alpha2, std::span<const u64> beta, u64 domain_size,
                                  unsigned domain_bits, const Modulus& p, Rng& rng) {
  check_domain(domain_size, domain_bits);
  if (alpha1 > alpha2) throw ParameterError("interval endpoints out of order");
  if (alpha2 >= domain_size) throw RangeError("interval endpoint outside the domain");
  u64 hi = alpha2 + 1;
  bool wrap = false;
  if (hi == domain_size) {
    hi = 0;
    wrap = true;
  }
  return dif_random(alpha1, hi, wrap, beta, domain_bits, p, rng);
}

std::pair<DifKey, DifKey> dif_gen_cyclic(u64 lo, u64 hi, std::span<const u64> beta, u64 domain_size,
                                         unsigned domain_bits, const Modulus& p, Rng& rng) {
  check_domain(domain_size, domain_bits);
  if (lo >= domain_size || hi >= domain_size) throw RangeError("interval endpoint outside the domain");
  if (lo == hi) throw ParameterError("cyclic interval must be non-empty and proper");
  return dif_random(lo, hi, lo > hi, beta, domain_bits, p, rng);
}

std::vector<u64> dif_eval(const DifKey& key, u64 x) {
  const Modulus p(key.upper.modulus);
  auto r = dcf_eval(key.upper, x);
  vec_sub_inplace(r, dcf_eval(key.lower, x), p);
  vec_add_inplace(r, key.offset, p);
  return r;
}

void write_tree_key(ByteWriter& w, const TreeKey& k) {
  w.u32(kKeyMagic);
  w.u8(static_cast<std::uint8_t>(k.kind));
  w.u8(k.party);
  w.u16(0);
  w.u64(k.modulus);
  w.u32(k.domain_bits);
  w.u32(k.payload_len);
  for (const auto& b : k.root) w.raw(b);
  for (const auto& cw : k.cws) {
    for (const auto& b : cw.s) w.raw(b);
    w.u8(static_cast<std::uint8_t>((cw.t_left ? 1 : 0) | (cw.t_right ? 2 : 0)));
    if (k.kind == TreeKind::LessThan) w.u64s(cw.v);
  }
  w.u64s(k.leaf);
}

TreeKey read_tree_key(ByteReader& r) {
  if (r.u32() != kKeyMagic) throw FormatError("bad FSS key magic");
  TreeKey k;
  auto kind = r.u8();
  if (kind != 1 && kind != 2) throw FormatError("unknown FSS key kind");
  k.kind = static_cast<TreeKind>(kind);
  k.party = r.u8();
  if (k.party > 1) throw FormatError("bad party index");
  r.u16();
  k.modulus = r.u64();
  k.domain_bits = r.u32();
  k.payload_len = r.u32();
  if (k.modulus < 2 || k.domain_bits == 0 || k.domain_bits > 63 || k.payload_len == 0 ||
      k.payload_len > (1u << 20)) {
    throw FormatError("FSS key header out of range");
  }
  auto read_seed = [&r]() {
    Seed s;
    for (auto& b : s) {
      auto raw = r.raw(16);
      std::memcpy(b.data(), raw.data(), 16);
    }
    return s;
  };
  k.root = read_seed();
  k.cws.resize(k.domain_bits);
  for (auto& cw : k.cws) {
    cw.s = read_seed();
    auto bits = r.u8();
    cw.t_left = bits & 1;
    cw.t_right = bits & 2;
    if (k.kind == TreeKind::LessThan) cw.v = r.u64s(k.payload_len);
  }
  k.leaf = r.u64s(k.payload_len);
  return k;
}

void write_dif_key(ByteWriter& w, const DifKey& k) {
  write_tree_key(w, k.lower);
  write_tree_key(w, k.upper);
  w.u64s(k.offset);
}

DifKey read_dif_key(ByteReader& r) {
  DifKey k;
  k.lower = read_tree_key(r);
  k.upper = read_tree_key(r);
  if (k.lower.payload_len != k.upper.payload_len || k.lower.modulus != k.upper.modulus) {
    throw FormatError("inconsistent interval key");
  }
  k.offset = r.u64s(k.lower.payload_len);
  return k;
}

Bytes serialize_key(const TreeKey& k) {
  ByteWriter w;
  write_tree_key(w, k);
  return std::move(w).take();
}

TreeKey deserialize_tree_key(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  auto k = read_tree_key(r);
  r.expect_done();
  return k;
}

Bytes serialize_key(const DifKey& k) {
  ByteWriter w;
  write_dif_key(w, k);
  return std::move(w).take();
}

DifKey deserialize_dif_key(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  auto k = read_dif_key(r);
  r.expect_done();
  return k;
}

}  // namespace duet::fss
