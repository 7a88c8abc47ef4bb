#include "duet/fss/prg.hpp"

#include <cstring>

#include "duet/common/error.hpp"

namespace duet::fss {

namespace {

const Block kFixedKey = {0x3a, 0x91, 0x0c, 0x5e, 0xd2, 0x47, 0x88, 0x1b,
                         0x6f, 0xe4, 0x23, 0xa9, 0x70, 0x15, 0xcb, 0x36};

const Aes128& fixed_aes() {
  thread_local Aes128 aes(kFixedKey);
  return aes;
}

thread_local std::uint64_t g_block_calls = 0;

}  // namespace

Seed seed_xor(const Seed& a, const Seed& b) {
  Seed r;
  for (std::size_t j = 0; j < kSeedBlocks; ++j) r[j] = block_xor(a[j], b[j]);
  return r;
}

bool seed_is_zero(const Seed& s) {
  for (const auto& b : s)
    for (auto x : b)
      if (x) return false;
  return true;
}

void prg_expand_block(unsigned j, const Block& x, PrgDomain domain, std::span<Block> out, std::uint64_t offset) {
  if (j >= kSeedBlocks) throw ParameterError("seed block index out of range");
  std::uint64_t hi = (static_cast<std::uint64_t>(domain) << 8) | j;
  std::vector<Block> in(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) in[k] = block_xor(x, block_from_u64(offset + k, hi));
  fixed_aes().encrypt(in, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = block_xor(out[k], in[k]);
}

std::vector<std::uint8_t> prg_block_bits(unsigned j, const Block& x, std::size_t out_bytes) {
  std::vector<Block> blocks((out_bytes + 15) / 16);
  prg_expand_block(j, x, PrgDomain::NodeBits, blocks);
  std::vector<std::uint8_t> r(out_bytes);
  if (out_bytes) std::memcpy(r.data(), blocks.data()->data(), out_bytes);
  return r;
}

std::vector<std::uint8_t> prg_seed_bits(const Seed& s, std::size_t out_bytes) {
  std::vector<std::uint8_t> acc(out_bytes, 0);
  for (unsigned j = 0; j < kSeedBlocks; ++j) {
    auto part = prg_block_bits(j, s[j], out_bytes);
    for (std::size_t i = 0; i < out_bytes; ++i) acc[i] ^= part[i];
  }
  return acc;
}

void prg_block_words(unsigned j, const Block& x, PrgDomain domain, const Modulus& p, std::size_t offset,
                     std::span<u64> out) {
  std::vector<Block> blocks(out.size());
  prg_expand_block(j, x, domain, blocks, offset);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = block_mod(blocks[k], p.value());
}

NodeBits parse_node_bits(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kNodeBitBytes) throw DimensionError("short node expansion");
  NodeBits nb;
  std::size_t off = 0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < kSeedBlocks; ++j) {
      std::memcpy(nb.s[c][j].data(), bytes.data() + off, 16);
      off += 16;
    }
  }
  nb.t[0] = bytes[off] & 1;
  nb.t[1] = (bytes[off] >> 1) & 1;
  return nb;
}

std::array<std::uint8_t, kNodeBitBytes> node_bits_block(unsigned j, const Block& x) {
  ++g_block_calls;
  std::array<Block, kNodeBitBlocks> blocks;
  prg_expand_block(j, x, PrgDomain::NodeBits, blocks);
  std::array<std::uint8_t, kNodeBitBytes> r;
  std::memcpy(r.data(), blocks.data()->data(), kNodeBitBytes);
  return r;
}

NodeBits expand_node_bits(const Seed& s) {
  std::array<std::uint8_t, kNodeBitBytes> acc{};
  for (unsigned j = 0; j < kSeedBlocks; ++j) {
    auto part = node_bits_block(j, s[j]);
    for (std::size_t i = 0; i < kNodeBitBytes; ++i) acc[i] ^= part[i];
  }
  return parse_node_bits(acc);
}

void node_words_block(unsigned j, const Block& x, const Modulus& p, unsigned dir, std::span<u64> out) {
  prg_block_words(j, x, PrgDomain::NodeWords, p, dir * out.size(), out);
}

std::vector<u64> expand_node_words(const Seed& s, const Modulus& p, unsigned dir, std::size_t L) {
  std::vector<u64> acc(L, 0), part(L);
  for (unsigned j = 0; j < kSeedBlocks; ++j) {
    node_words_block(j, s[j], p, dir, part);
    vec_add_inplace(acc, part, p);
  }
  return acc;
}

void convert_block(unsigned j, const Block& x, const Modulus& p, std::span<u64> out) {
  ++g_block_calls;
  prg_block_words(j, x, PrgDomain::Convert, p, 0, out);
}

std::vector<u64> convert_seed(const Seed& s, const Modulus& p, std::size_t L) {
  std::vector<u64> acc(L, 0), part(L);
  for (unsigned j = 0; j < kSeedBlocks; ++j) {
    convert_block(j, s[j], p, part);
    vec_add_inplace(acc, part, p);
  }
  return acc;
}

std::uint64_t prg_block_calls() { return g_block_calls; }
void reset_prg_block_calls() { g_block_calls = 0; }

}  // namespace duet::fss
