#include "duet/tee/replicated.hpp"

#include "duet/common/error.hpp"
#include "duet/fss/prg.hpp"

namespace duet::tee {

using transport::MsgKind;

BShare operator^(const BShare& x, const BShare& y) { return {x.a ^ y.a, x.b ^ y.b}; }

BShare operator&(const BShare& x, const BitVec& pub) { return {x.a & pub, x.b & pub}; }

Party3Stats& Party3Stats::operator+=(const Party3Stats& o) {
  and_gates += o.and_gates;
  mults += o.mults;
  rounds += o.rounds;
  prg_calls_in_protocol += o.prg_calls_in_protocol;
  return *this;
}

Party3::Party3(unsigned index, transport::Channel& prev, transport::Channel& next, const Modulus& p)
    : i_(index), prev_(prev), next_(next), p_(p) {
  if (index >= 3) throw ParameterError("party index must be 0, 1 or 2");
}

void Party3::setup(const Block& own_key) {
  prev_.send(MsgKind::EnclaveShare, own_key);
  auto got = next_.recv_expect(MsgKind::EnclaveShare);
  if (got.size() != 16) throw ProtocolAbort("malformed zero-sharing key");
  Block nk;
  std::copy(got.begin(), got.end(), nk.begin());
  zk_self_ = std::make_unique<Rng>(own_key);
  zk_next_ = std::make_unique<Rng>(nk);
}

void Party3::begin_op() {
  if (!zk_self_) throw Error("3PC party used before setup");
  prg_mark_ = fss::prg_block_calls();
  ++stats_.rounds;
}

void Party3::end_op() { stats_.prg_calls_in_protocol += fss::prg_block_calls() - prg_mark_; }

BitVec Party3::zero_bits(std::size_t n) {
  Bytes x((n + 7) / 8), y((n + 7) / 8);
  zk_self_->fill(x);
  zk_next_->fill(y);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] ^= y[k];
  return BitVec::from_bytes(x, n);
}

std::vector<u64> Party3::zero_words(std::size_t n) {
  std::vector<u64> z(n);
  for (auto& v : z) {
    u64 s = zk_self_->uniform(p_.value());
    v = p_.sub(s, zk_next_->uniform(p_.value()));
  }
  return z;
}

BShare Party3::bconst(const BitVec& v) const {
  BitVec zero(v.size());
  if (i_ == 0) return {v, zero};
  if (i_ == 2) return {zero, v};
  return {zero, zero};
}

BShare Party3::bnot(BShare x) const { return x ^ bconst(BitVec::ones(x.size())); }

BShare Party3::bslot(unsigned slot, const BitVec& value) const {
  BitVec zero(value.size());
  return {slot == i_ ? value : zero, slot == (i_ + 1) % 3 ? value : zero};
}

AShare Party3::aconst(const std::vector<u64>& v) const {
  std::vector<u64> zero(v.size(), 0);
  if (i_ == 0) return {v, zero};
  if (i_ == 2) return {zero, v};
  return {zero, zero};
}

AShare Party3::aslot(unsigned slot, const std::vector<u64>& value) const {
  std::vector<u64> zero(value.size(), 0);
  return {slot == i_ ? value : zero, slot == (i_ + 1) % 3 ? value : zero};
}

AShare Party3::add(const AShare& x, const AShare& y) const { return {vec_add(x.a, y.a, p_), vec_add(x.b, y.b, p_)}; }

AShare Party3::sub(const AShare& x, const AShare& y) const { return {vec_sub(x.a, y.a, p_), vec_sub(x.b, y.b, p_)}; }

AShare Party3::scale(const AShare& x, u64 c) const {
  AShare r = x;
  for (auto& v : r.a) v = p_.mul(v, c);
  for (auto& v : r.b) v = p_.mul(v, c);
  return r;
}

AShare Party3::mul_public(const AShare& x, const std::vector<u64>& c) const {
  if (c.size() != x.size()) throw DimensionError("public factor length mismatch");
  AShare r = x;
  for (std::size_t k = 0; k < c.size(); ++k) {
    r.a[k] = p_.mul(r.a[k], c[k]);
    r.b[k] = p_.mul(r.b[k], c[k]);
  }
  return r;
}

AShare Party3::repeat(const AShare& x, const std::vector<std::size_t>& width) {
  if (width.size() != x.size()) throw DimensionError("repeat width length mismatch");
  AShare r;
  for (std::size_t k = 0; k < width.size(); ++k) {
    r.a.insert(r.a.end(), width[k], x.a[k]);
    r.b.insert(r.b.end(), width[k], x.b[k]);
  }
  return r;
}

AShare Party3::slice(const AShare& x, std::size_t off, std::size_t len) {
  if (off + len > x.size()) throw DimensionError("word slice out of range");
  return {std::vector<u64>(x.a.begin() + off, x.a.begin() + off + len),
          std::vector<u64>(x.b.begin() + off, x.b.begin() + off + len)};
}

void Party3::append(AShare& x, const AShare& y) {
  x.a.insert(x.a.end(), y.a.begin(), y.a.end());
  x.b.insert(x.b.end(), y.b.begin(), y.b.end());
}

namespace {

struct Payload {
  BitVec bits;
  std::vector<u64> words;
};

Bytes pack(const Payload& p) {
  ByteWriter w;
  w.raw(p.bits.to_bytes());
  w.u64s(p.words);
  return std::move(w).take();
}

Payload unpack(const Bytes& b, std::size_t nbits, std::size_t nwords) {
  ByteReader r(b);
  Payload p;
  auto raw = r.raw((nbits + 7) / 8);
  p.bits = BitVec::from_bytes(raw, nbits);
  p.words = r.u64s(nwords);
  r.expect_done();
  return p;
}

template <class T, class F>
void split_bits(const BitVec& all, const std::vector<T>& parts, F&& sink) {
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::size_t n = parts[k];
    sink(k, all.slice(off, n));
    off += n;
  }
}

}  // namespace

Bytes Party3::exchange_back(const Bytes& payload) {
  if (!zk_self_) throw Error("3PC party used before setup");
  prev_.send(MsgKind::EnclaveShare, payload);
  return next_.recv_expect(MsgKind::EnclaveShare);
}

void Party3::mul_round(const std::vector<std::pair<const BShare*, const BShare*>>& band, std::vector<BShare>& bout,
                       const std::vector<std::pair<const AShare*, const AShare*>>& amul,
                       std::vector<AShare>& aout) {
  begin_op();
  Payload mine;
  std::vector<std::size_t> bsz, asz;
  for (auto [x, y] : band) {
    if (x->size() != y->size()) throw DimensionError("AND operand length mismatch");
    BitVec z = (x->a & y->a) ^ (x->a & y->b) ^ (x->b & y->a);
    mine.bits.append(z);
    bsz.push_back(z.size());
  }
  if (mine.bits.size()) mine.bits ^= zero_bits(mine.bits.size());
  for (auto [x, y] : amul) {
    if (x->size() != y->size()) throw DimensionError("product operand length mismatch");
    for (std::size_t k = 0; k < x->size(); ++k) {
      u64 z = p_.add(p_.mul(x->a[k], y->a[k]), p_.add(p_.mul(x->a[k], y->b[k]), p_.mul(x->b[k], y->a[k])));
      mine.words.push_back(z);
    }
    asz.push_back(x->size());
  }
  auto zw = zero_words(mine.words.size());
  for (std::size_t k = 0; k < zw.size(); ++k) mine.words[k] = p_.add(mine.words[k], zw[k]);
  stats_.and_gates += mine.bits.size();
  stats_.mults += mine.words.size();

  Payload theirs = unpack(exchange_back(pack(mine)), mine.bits.size(), mine.words.size());
  bout.clear();
  std::size_t off = 0;
  for (auto n : bsz) {
    bout.push_back({mine.bits.slice(off, n), theirs.bits.slice(off, n)});
    off += n;
  }
  aout.clear();
  off = 0;
  for (auto n : asz) {
    aout.push_back({std::vector<u64>(mine.words.begin() + off, mine.words.begin() + off + n),
                    std::vector<u64>(theirs.words.begin() + off, theirs.words.begin() + off + n)});
    off += n;
  }
  end_op();
}

BShare Party3::band(const BShare& x, const BShare& y) {
  std::vector<BShare> b;
  std::vector<AShare> a;
  mul_round({{&x, &y}}, b, {}, a);
  return std::move(b[0]);
}

AShare Party3::amul(const AShare& x, const AShare& y) {
  std::vector<BShare> b;
  std::vector<AShare> a;
  mul_round({}, b, {{&x, &y}}, a);
  return std::move(a[0]);
}

void Party3::open_round(const std::vector<const BShare*>& bs, std::vector<BitVec>& bout,
                        const std::vector<const AShare*>& as, std::vector<std::vector<u64>>& aout) {
  begin_op();
  Payload mine;
  for (auto* x : bs) mine.bits.append(x->a);
  for (auto* x : as) mine.words.insert(mine.words.end(), x->a.begin(), x->a.end());
  next_.send(MsgKind::EnclaveShare, pack(mine));
  Payload theirs = unpack(prev_.recv_expect(MsgKind::EnclaveShare), mine.bits.size(), mine.words.size());
  bout.clear();
  std::size_t off = 0;
  for (auto* x : bs) {
    bout.push_back(x->a ^ x->b ^ theirs.bits.slice(off, x->size()));
    off += x->size();
  }
  aout.clear();
  off = 0;
  for (auto* x : as) {
    std::vector<u64> v(x->size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = p_.add(p_.add(x->a[k], x->b[k]), theirs.words[off + k]);
    aout.push_back(std::move(v));
    off += x->size();
  }
  end_op();
}

BitVec Party3::open(const BShare& x) {
  std::vector<BitVec> b;
  std::vector<std::vector<u64>> a;
  open_round({&x}, b, {}, a);
  return std::move(b[0]);
}

std::vector<u64> Party3::open(const AShare& x) {
  std::vector<BitVec> b;
  std::vector<std::vector<u64>> a;
  open_round({}, b, {&x}, a);
  return std::move(a[0]);
}

void Party3::reshare_round(const std::vector<const BitVec*>& bs, std::vector<BShare>& bout,
                           const std::vector<const std::vector<u64>*>& as, std::vector<AShare>& aout) {
  begin_op();
  Payload mine;
  for (auto* x : bs) mine.bits.append(*x);
  for (auto* x : as) mine.words.insert(mine.words.end(), x->begin(), x->end());
  if (mine.bits.size()) mine.bits ^= zero_bits(mine.bits.size());
  auto zw = zero_words(mine.words.size());
  for (std::size_t k = 0; k < zw.size(); ++k) mine.words[k] = p_.add(mine.words[k], zw[k]);
  Payload theirs = unpack(exchange_back(pack(mine)), mine.bits.size(), mine.words.size());
  bout.clear();
  std::size_t off = 0;
  for (auto* x : bs) {
    bout.push_back({mine.bits.slice(off, x->size()), theirs.bits.slice(off, x->size())});
    off += x->size();
  }
  aout.clear();
  off = 0;
  for (auto* x : as) {
    aout.push_back({std::vector<u64>(mine.words.begin() + off, mine.words.begin() + off + x->size()),
                    std::vector<u64>(theirs.words.begin() + off, theirs.words.begin() + off + x->size())});
    off += x->size();
  }
  end_op();
}

void Party3::distribute_round(const std::vector<const BitVec*>& bs, std::vector<BShare>& bout,
                              const std::vector<const std::vector<u64>*>& as, std::vector<AShare>& aout) {
  begin_op();
  Payload mine;
  for (auto* x : bs) mine.bits.append(*x);
  for (auto* x : as) mine.words.insert(mine.words.end(), x->begin(), x->end());
  Payload theirs = unpack(exchange_back(pack(mine)), mine.bits.size(), mine.words.size());
  bout.clear();
  std::size_t off = 0;
  for (auto* x : bs) {
    bout.push_back({*x, theirs.bits.slice(off, x->size())});
    off += x->size();
  }
  aout.clear();
  off = 0;
  for (auto* x : as) {
    aout.push_back({*x, std::vector<u64>(theirs.words.begin() + off, theirs.words.begin() + off + x->size())});
    off += x->size();
  }
  end_op();
}

namespace {

std::vector<BitVec> bit_slices(const std::vector<u64>& v, unsigned nbits) {
  std::vector<BitVec> out(nbits, BitVec(v.size()));
  for (std::size_t t = 0; t < v.size(); ++t)
    for (unsigned k = 0; k < nbits; ++k)
      if ((v[t] >> k) & 1) out[k].set(t, true);
  return out;
}

BitVec const_bits(bool bit, std::size_t n) { return bit ? BitVec::ones(n) : BitVec(n); }

}  // namespace

Sliced a2b(Party3& P, const AShare& x, unsigned nbits) {
  const std::size_t T = x.size();
  const unsigned i = P.index();
  const u64 p = P.modulus().value();
  if (nbits == 0 || nbits > 61 || (p >> nbits) != 0) throw ParameterError("bit width does not hold the modulus");
  auto ca = bit_slices(x.a, nbits), cb = bit_slices(x.b, nbits);
  const BitVec zero(T);
  std::vector<Sliced> X(3, Sliced(nbits));
  for (unsigned j = 0; j < 3; ++j) {
    for (unsigned k = 0; k < nbits; ++k) {
      const BitVec& v = j == i ? ca[k] : (j == (i + 1) % 3 ? cb[k] : zero);
      X[j][k] = P.bslot(j, v);
    }
  }

  // Carry-save layer: x0 + x1 + x2 = s + 2c.
  std::vector<BShare> l(nbits), r(nbits), c;
  std::vector<std::pair<const BShare*, const BShare*>> ands;
  Sliced s(nbits);
  for (unsigned k = 0; k < nbits; ++k) {
    s[k] = X[0][k] ^ X[1][k] ^ X[2][k];
    l[k] = X[0][k] ^ X[2][k];
    r[k] = X[1][k] ^ X[2][k];
    ands.push_back({&l[k], &r[k]});
  }
  std::vector<AShare> unused;
  P.mul_round(ands, c, {}, unused);
  for (unsigned k = 0; k < nbits; ++k) c[k] = c[k] ^ X[2][k];

  // Ripple-carry addition of s and 2c.
  const unsigned W = nbits + 2;
  const BShare zs = P.bconst(zero);
  Sliced S(W);
  BShare carry = zs;
  for (unsigned k = 0; k < W; ++k) {
    const BShare& A = k < nbits ? s[k] : zs;
    const BShare& B = (k >= 1 && k - 1 < nbits) ? c[k - 1] : zs;
    S[k] = A ^ B ^ carry;
    if (k == 0 || k + 1 == W) continue;  // carry into bit 1 is zero: B_0 = 0
    BShare u = A ^ carry, v = B ^ carry;
    carry = P.band(u, v) ^ carry;
  }

  // Conditional subtraction of p and 2p.
  const u64 mods[2] = {p, 2 * p};
  BShare cr[2] = {P.bconst(BitVec::ones(T)), P.bconst(BitVec::ones(T))};
  std::vector<Sliced> D(2, Sliced(W));
  for (unsigned k = 0; k < W; ++k) {
    std::vector<BShare> outs;
    std::vector<std::pair<const BShare*, const BShare*>> prs;
    for (int m = 0; m < 2; ++m) {
      const bool pb = !((mods[m] >> k) & 1);
      D[m][k] = S[k] ^ cr[m] ^ P.bconst(const_bits(pb, T));
      prs.push_back({&S[k], &cr[m]});
    }
    P.mul_round(prs, outs, {}, unused);
    for (int m = 0; m < 2; ++m) {
      const bool pb = !((mods[m] >> k) & 1);
      cr[m] = pb ? (S[k] ^ cr[m] ^ outs[m]) : outs[m];
    }
  }
  // cr[m] is now [S >= mods[m]].
  std::vector<BShare> d1(nbits), d2(nbits), picks;
  ands.clear();
  for (unsigned k = 0; k < nbits; ++k) {
    d1[k] = D[0][k] ^ S[k];
    d2[k] = D[1][k] ^ D[0][k];
    ands.push_back({&cr[0], &d1[k]});
    ands.push_back({&cr[1], &d2[k]});
  }
  P.mul_round(ands, picks, {}, unused);
  Sliced out(nbits);
  for (unsigned k = 0; k < nbits; ++k) out[k] = S[k] ^ picks[2 * k] ^ picks[2 * k + 1];
  return out;
}

AShare b2a(Party3& P, const BShare& bits) {
  const unsigned i = P.index();
  const std::size_t T = bits.size();
  std::vector<u64> wa(T), wb(T), zero(T, 0);
  for (std::size_t t = 0; t < T; ++t) {
    wa[t] = bits.a.get(t);
    wb[t] = bits.b.get(t);
  }
  AShare A[3];
  for (unsigned j = 0; j < 3; ++j) A[j] = P.aslot(j, j == i ? wa : (j == (i + 1) % 3 ? wb : zero));
  // x ^ y = x + y - 2xy over 0/1 values.
  auto xor01 = [&](const AShare& x, const AShare& y) {
    AShare xy = P.amul(x, y);
    return P.sub(P.add(x, y), P.scale(xy, 2));
  };
  return xor01(xor01(A[0], A[1]), A[2]);
}

BShare greater_than(Party3& P, const Sliced& x, const Sliced& y) {
  if (x.size() != y.size() || x.empty()) throw DimensionError("comparison width mismatch");
  const std::size_t T = x[0].size();
  // Carry out of y + ~x + 1 is [y >= x].
  BShare carry = P.bconst(BitVec::ones(T));
  for (std::size_t k = 0; k < x.size(); ++k) {
    BShare nx = P.bnot(x[k]);
    BShare u = y[k] ^ carry, v = nx ^ carry;
    carry = P.band(u, v) ^ carry;
  }
  return P.bnot(carry);
}

}  // namespace duet::tee
