#include "duet/tee/bitvec.hpp"

#include <bit>
#include <cstring>

#include "duet/common/error.hpp"

namespace duet::tee {

BitVec BitVec::from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits) {
  if (bytes.size() * 8 < nbits) throw DimensionError("bit string too short");
  BitVec v(nbits);
  std::size_t nb = (nbits + 7) / 8;
  for (std::size_t i = 0; i < nb; ++i) v.w_[i >> 3] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i & 7));
  v.trim();
  return v;
}

BitVec BitVec::ones(std::size_t nbits) {
  BitVec v(nbits);
  for (auto& w : v.w_) w = ~0ULL;
  v.trim();
  return v;
}

void BitVec::set(std::size_t i, bool v) {
  if (v)
    w_[i >> 6] |= 1ULL << (i & 63);
  else
    w_[i >> 6] &= ~(1ULL << (i & 63));
}

void BitVec::write_to(std::uint8_t* out) const {
  std::size_t nb = (n_ + 7) / 8;
  for (std::size_t i = 0; i < nb; ++i) out[i] = static_cast<std::uint8_t>(w_[i >> 3] >> (8 * (i & 7)));
}

Bytes BitVec::to_bytes() const {
  Bytes b((n_ + 7) / 8);
  write_to(b.data());
  return b;
}

BitVec& BitVec::operator^=(const BitVec& o) {
  if (o.n_ != n_) throw DimensionError("bit string length mismatch");
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
  return *this;
}

BitVec& BitVec::operator&=(const BitVec& o) {
  if (o.n_ != n_) throw DimensionError("bit string length mismatch");
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
  return *this;
}

void BitVec::flip() {
  for (auto& w : w_) w = ~w;
  trim();
}

void BitVec::trim() {
  if (n_ & 63) w_.back() &= (1ULL << (n_ & 63)) - 1;
}

std::uint64_t BitVec::read64(std::size_t pos) const {
  std::size_t wi = pos >> 6, sh = pos & 63;
  std::uint64_t lo = wi < w_.size() ? w_[wi] : 0;
  if (sh == 0) return lo;
  std::uint64_t hi = wi + 1 < w_.size() ? w_[wi + 1] : 0;
  return (lo >> sh) | (hi << (64 - sh));
}

BitVec BitVec::slice(std::size_t offset, std::size_t len) const {
  if (offset + len > n_) throw DimensionError("bit slice out of range");
  BitVec r(len);
  for (std::size_t k = 0; k < r.w_.size(); ++k) r.w_[k] = read64(offset + 64 * k);
  r.trim();
  return r;
}

void BitVec::append(const BitVec& o) {
  const std::size_t off = n_;
  n_ += o.n_;
  w_.resize((n_ + 63) / 64, 0);
  const std::size_t sh = off & 63, base = off >> 6;
  for (std::size_t k = 0; k < o.w_.size(); ++k) {
    w_[base + k] |= o.w_[k] << sh;
    if (sh && base + k + 1 < w_.size()) w_[base + k + 1] |= o.w_[k] >> (64 - sh);
  }
}

BitVec BitVec::broadcast(std::size_t width) const {
  BitVec r(n_ * width);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!get(i)) continue;
    std::size_t lo = i * width, hi = lo + width;
    while (lo < hi) {
      std::size_t wi = lo >> 6, sh = lo & 63;
      std::size_t take = std::min<std::size_t>(64 - sh, hi - lo);
      std::uint64_t mask = take == 64 ? ~0ULL : ((1ULL << take) - 1) << sh;
      r.w_[wi] |= mask;
      lo += take;
    }
  }
  return r;
}

std::size_t BitVec::popcount() const {
  std::size_t c = 0;
  for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

}  // namespace duet::tee
