#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "duet/common/bytes.hpp"

namespace duet::tee {

// Packed bit string, LSB-first within 64-bit words. Bits past size() are zero.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t nbits) : n_(nbits), w_((nbits + 63) / 64, 0) {}
  static BitVec from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits);
  static BitVec ones(std::size_t nbits);

  std::size_t size() const { return n_; }
  bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
  void set(std::size_t i, bool v);
  // Bytes ceil(size/8), little-endian bit order.
  Bytes to_bytes() const;
  void write_to(std::uint8_t* out) const;

  BitVec& operator^=(const BitVec& o);
  BitVec& operator&=(const BitVec& o);
  friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }
  friend BitVec operator&(BitVec a, const BitVec& b) { return a &= b; }
  bool operator==(const BitVec&) const = default;
  void flip();

  BitVec slice(std::size_t offset, std::size_t len) const;
  void append(const BitVec& o);
  // Each bit repeated `width` times in place.
  BitVec broadcast(std::size_t width) const;
  std::size_t popcount() const;

 private:
  std::uint64_t read64(std::size_t pos) const;
  void trim();

  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace duet::tee
